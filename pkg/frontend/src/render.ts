/** Rendering: view models + HTML strings for each panel. */

import {
  ASPECT_LABELS,
  ASPECT_ORDER,
  ASPECT_TOOLTIPS,
  STAR_SCALE,
  type AspectName,
  type AspectReport,
  type FigureDetail,
  type FigureSummary,
  type GeneratedCaption,
  type MentionParagraph,
  type Rating,
  type SessionSummary,
} from "./model.js";

export type CheckIcon = "check" | "alert" | "dash";

export interface CheckRow {
  aspect: AspectName;
  label: string;
  icon: CheckIcon;
  tooltip: string;
}

export class MalformedReportError extends Error {}

const ICON_GLYPHS: Record<CheckIcon, string> = {
  check: "✓", // ✓
  alert: "⚠", // ⚠ triangle alert
  dash: "–", // –
};

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/**
 * Map an aspect report onto the six-icon row, in fixed order: satisfied
 * aspects get a check, missed ones a triangle alert, unknown a neutral dash
 * with a tooltip explaining why.
 */
export function checkTableRows(report: AspectReport): CheckRow[] {
  const aspects = report?.aspects;
  if (!aspects || Object.keys(aspects).length !== ASPECT_ORDER.length) {
    throw new MalformedReportError("aspect report must carry exactly six aspects");
  }
  return ASPECT_ORDER.map((aspect) => {
    const entry = aspects[aspect];
    if (!entry) {
      throw new MalformedReportError(`aspect report is missing "${aspect}"`);
    }
    let icon: CheckIcon;
    let tooltip = ASPECT_TOOLTIPS[aspect];
    if (entry.satisfied === "yes") {
      icon = "check";
    } else if (entry.satisfied === "no") {
      icon = "alert";
    } else if (entry.satisfied === "unknown") {
      icon = "dash";
      tooltip = "No figure text available for this check.";
    } else {
      throw new MalformedReportError(
        `aspect "${aspect}" has unexpected state "${String(entry.satisfied)}"`,
      );
    }
    return { aspect, label: ASPECT_LABELS[aspect], icon, tooltip };
  });
}

export function renderCheckTable(report: AspectReport): string {
  let rows: CheckRow[];
  try {
    rows = checkTableRows(report);
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    return `<div class="error-banner" role="alert">Check table unavailable: ${escapeHtml(message)}</div>`;
  }
  const cells = rows
    .map(
      (row) => `
    <div class="check-cell" title="${escapeHtml(row.tooltip)}">
      <span class="check-icon icon-${row.icon}">${ICON_GLYPHS[row.icon]}</span>
      <span class="check-label">${escapeHtml(row.label)}</span>
    </div>`,
    )
    .join("");
  return `<div class="check-table">${cells}</div>`;
}

export interface StarRow {
  filled: number;
  empty: number;
}

/** Six-star scale: score n means n filled stars. Out-of-range throws. */
export function starRow(score: number): StarRow {
  if (!Number.isInteger(score) || score < 1 || score > STAR_SCALE) {
    throw new RangeError(`score must be an integer in [1, ${STAR_SCALE}], got ${score}`);
  }
  return { filled: score, empty: STAR_SCALE - score };
}

export function renderStars(score: number): string {
  let row: StarRow;
  try {
    row = starRow(score);
  } catch {
    return `<span class="error-badge" role="alert">invalid rating ${escapeHtml(String(score))}</span>`;
  }
  const stars = "★".repeat(row.filled) + "☆".repeat(row.empty);
  return `<span class="stars" aria-label="${row.filled} of ${STAR_SCALE} stars">${stars}</span>`;
}

/** Rating panel: stars plus the explanation, always visible (no hover). */
export function renderRating(rating: Rating | null): string {
  if (!rating) {
    return `<p class="muted">No rating yet.</p>`;
  }
  return `
    ${renderStars(rating.score)}
    <p class="rating-explanation">${escapeHtml(rating.explanation)}</p>
    <p class="muted backend-note">backend: ${escapeHtml(rating.backend_id)}</p>`;
}

export function renderGenerated(
  variant: "long" | "short",
  caption: GeneratedCaption | null,
  error: string | undefined,
): string {
  const title = variant === "long" ? "Long draft" : "Short draft";
  if (!caption) {
    const reason = error ? escapeHtml(error) : "unavailable";
    return `
      <div class="generated" data-variant="${variant}">
        <h4>${title}</h4>
        <p class="muted">Not available: ${reason}.</p>
      </div>`;
  }
  const stars = caption.rating ? renderStars(caption.rating.score) : "";
  return `
    <div class="generated" data-variant="${variant}">
      <h4>${title} ${stars}</h4>
      <p class="generated-text">${escapeHtml(caption.text)}</p>
      <button type="button" class="copy-to-editor" data-text="${escapeHtml(caption.text)}">
        Copy to editor
      </button>
    </div>`;
}

export function renderParagraphs(paragraphs: MentionParagraph[]): string {
  if (paragraphs.length === 0) {
    return `<p class="muted">No paragraph in the document mentions this figure.</p>`;
  }
  const items = paragraphs
    .map(
      (p) => `
    <li class="mention-paragraph">
      <span class="paragraph-index">¶${p.index + 1}</span>
      <span class="paragraph-text">${escapeHtml(p.text)}</span>
    </li>`,
    )
    .join("");
  return `<ol class="mention-paragraphs">${items}</ol>`;
}

export function renderFigureBar(figures: FigureSummary[], selected: string | null): string {
  if (figures.length === 0) {
    return `<p class="muted">No figures extracted.</p>`;
  }
  return figures
    .map((fig) => {
      const active = fig.id === selected ? " active" : "";
      const score = fig.rating_score != null ? ` ★${fig.rating_score}` : "";
      return `<button type="button" class="figure-tab${active}" data-figure-id="${escapeHtml(fig.id)}">
        Figure ${escapeHtml(fig.id)} (p.${fig.page})${score}
      </button>`;
    })
    .join("");
}

export function renderFigurePlaceholder(detail: FigureDetail): string {
  const fig = detail.figure;
  if (fig.image_ref) {
    return `<img class="figure-image" src="${escapeHtml(fig.image_ref)}" alt="Figure ${escapeHtml(fig.id)}" />`;
  }
  const region = fig.has_region ? " (region data available)" : "";
  return `
    <div class="figure-placeholder">
      <p>Figure ${escapeHtml(fig.id)} — page ${fig.page}${region}</p>
      <p class="muted">No image supplied for this figure.</p>
    </div>`;
}

export function evaluateButtonLabel(session: SessionSummary): string {
  return `Evaluate (${session.evaluations_used}/${session.evaluation_limit} used)`;
}

/** Payload types of the capsmith HTTP API. */

export type SatisfiedValue = "yes" | "no" | "unknown";

export interface AspectEntry {
  satisfied: SatisfiedValue;
  evidence: [number, number][];
  backend_id: string;
}

export interface AspectReport {
  caption: string;
  aspects: Record<string, AspectEntry>;
}

export interface Rating {
  score: number;
  explanation: string;
  backend_id: string;
  raw_response?: string;
}

export interface GeneratedCaption {
  variant: "long" | "short";
  text: string;
  backend_id: string;
  rating?: Rating;
}

export interface SessionSummary {
  evaluations_used: number;
  evaluation_limit: number;
  drafts: number;
}

export interface FigureSummary {
  id: string;
  page: number;
  caption: string;
  rating_score: number | null;
}

export interface FigureInfo {
  id: string;
  kind: string;
  page: number;
  caption: string;
  image_ref: string | null;
  has_region: boolean;
}

export interface MentionParagraph {
  index: number;
  text: string;
}

export interface FigureDetail {
  figure: FigureInfo;
  current_caption: string;
  aspect_report: AspectReport;
  rating: Rating | null;
  generated: {
    long: GeneratedCaption | null;
    short: GeneratedCaption | null;
    errors: Record<string, string>;
  };
  mention_paragraphs: MentionParagraph[];
  session: SessionSummary;
}

export interface UploadSummary {
  doc_id: string;
  figure_count: number;
  paragraph_count: number;
  dropped_tables: number;
  warnings: string[];
}

export interface EvaluationResponse {
  aspect_report: AspectReport;
  rating: Rating;
  session: SessionSummary;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

/** Display order of the six aspects; the server always sends all six. */
export const ASPECT_ORDER = [
  "helpfulness",
  "ocr",
  "relation",
  "stats",
  "takeaway",
  "visual",
] as const;

export type AspectName = (typeof ASPECT_ORDER)[number];

export const ASPECT_LABELS: Record<AspectName, string> = {
  helpfulness: "Helpfulness",
  ocr: "OCR",
  relation: "Relation",
  stats: "Stats",
  takeaway: "Takeaway",
  visual: "Visual",
};

export const ASPECT_TOOLTIPS: Record<AspectName, string> = {
  helpfulness: "Overall: does the caption help a reader make sense of the figure?",
  ocr: "Repeats words that appear inside the figure (axis titles, legends, labels).",
  relation: "Relates two or more elements, e.g. one series lower or higher than another.",
  stats: "Cites a number or statistic taken from the figure.",
  takeaway: "States the conclusion or insight the figure is meant to convey.",
  visual: "Mentions visual characteristics: color, shape, direction, size, position, opacity.",
};

export const STAR_SCALE = 6;

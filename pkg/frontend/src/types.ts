/** Wire types for the review backend's HTTP+JSON interface. */

export type TestStatus = "pass" | "fail" | "invalid";

export interface TestSummary {
  id: string;
  doc_id: string;
  category: string;
  type: "present" | "absent" | "order" | "table";
  target: string;
  max_diffs: number;
  status?: TestStatus;
  explanation?: string;
}

export interface NormalizationProfile {
  markup_cleanup?: boolean;
  unicode_harmonize?: boolean;
  ascii_projection?: boolean;
  alnum_filter?: boolean;
  drop_intraline_spaces?: boolean;
  drop_linebreaks?: boolean;
  masks?: string[];
}

export const PROFILE_FLAGS = [
  "markup_cleanup",
  "unicode_harmonize",
  "ascii_projection",
  "alnum_filter",
  "drop_intraline_spaces",
  "drop_linebreaks",
] as const;

export type ProfileFlag = (typeof PROFILE_FLAGS)[number];

export const RELATION_KINDS = [
  "up",
  "down",
  "left",
  "right",
  "top_heading",
  "left_heading",
] as const;

export type RelationKind = (typeof RELATION_KINDS)[number];

/** Raw test record as stored in the suite JSONL. */
export interface TestRecord {
  id: string;
  pdf: string;
  page: number;
  category: string;
  type: TestSummary["type"];
  max_diffs?: number;
  profile?: NormalizationProfile;
  text?: string;
  before?: string;
  after?: string;
  cell?: string;
  up?: string;
  down?: string;
  left?: string;
  right?: string;
  top_heading?: string;
  left_heading?: string;
}

export interface TestDetail {
  test: TestRecord;
  status?: TestStatus;
  explanation?: string;
  matched_span?: [number, number] | null;
}

export interface DiffHunk {
  kind: "equal" | "insert" | "delete";
  text: string;
}

export interface DiffPayload {
  test_id: string;
  model: string;
  status: TestStatus;
  explanation: string;
  target: string;
  window: { start: number; end: number; text: string };
  context_before: string;
  context_after: string;
  hunks: DiffHunk[];
  raw_hint: { start: number; end: number } | null;
}

export type Responsible = "model" | "benchmark" | "ambiguity";

export interface AuditSummary {
  total: number;
  responsibility: Record<Responsible, { count: number; percent: number }>;
  labels: { label: string; count: number }[];
}

export interface ReviewAck {
  stored: boolean;
  review: {
    test_id: string;
    label: string;
    responsible: Responsible;
    reviewer: string;
    timestamp: string;
    comment: string;
  };
}

/** PATCH body: target text fields, profile, masks, max_diffs only. */
export type TestPatch = Partial<
  Pick<
    TestRecord,
    | "text"
    | "before"
    | "after"
    | "cell"
    | "up"
    | "down"
    | "left"
    | "right"
    | "top_heading"
    | "left_heading"
    | "max_diffs"
    | "profile"
  >
> & { masks?: string[] };

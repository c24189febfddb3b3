// Wire contracts shared with the HTTP API; field names mirror the server's
// JSON exactly.

export type ChartType = "donut" | "bar" | "area" | "line" | "table";

export interface ChartPoint {
  label: string;
  value: number;
}

export interface ChartSpec {
  chart_type: ChartType;
  title: string;
  dimension: string;
  measure: string;
  data: ChartPoint[];
}

export interface PlanStep {
  index: number;
  description: string;
  agent_role: string;
  output_kind: "chart" | "table" | "text";
}

export interface TaskPlan {
  goal: string;
  steps: PlanStep[];
}

export interface ConversationIndex {
  conversation_id: string;
  title: string;
  created_at: string;
  event_count: number;
}

const ISO_DATEISH = /^\d{4}-\d{2}(-\d{2})?$/;

/** True when every label parses as an ISO calendar date (possibly reduced
 * precision), i.e. the dimension is temporal. */
export function isTemporal(spec: ChartSpec): boolean {
  return spec.data.length > 0 && spec.data.every((p) => ISO_DATEISH.test(p.label));
}

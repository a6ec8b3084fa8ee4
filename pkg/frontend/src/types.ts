/**
 * Typed mirrors of the JSON documents the tuning service exchanges.
 *
 * The console never computes costs on its own. Every number it puts on
 * screen is read straight out of one of these documents; the only
 * arithmetic in the client is coordinate scaling for display.
 */

export interface DesignDoc {
  replica_count: number;
  configs: string[][];
  routing: {
    normal: Record<string, number[]>;
    on_failure: Record<string, Record<string, number[]>>;
  };
}

export interface BreakdownDoc {
  total: number;
  query_cost: number;
  update_cost: number;
  expected_total: number;
  per_replica_load: number[];
}

export interface TuneResultDoc {
  status: string;
  objective: number;
  gap: number;
  wall_time: number;
  nodes_explored: number;
  num_variables: number;
  num_constraints: number;
  design: DesignDoc;
  breakdown: BreakdownDoc;
  dropped_replicas: number[];
  fell_back_to_exact: boolean;
  used_greedy_balance: boolean;
}

// Workload files are authored elsewhere and passed through verbatim; the
// console only reads statement ids for its own widgets.
export interface StatementRef {
  id: string;
  [key: string]: unknown;
}

export interface WorkloadDoc {
  tables: unknown[];
  indexes: StatementRef[];
  queries: StatementRef[];
  updates: StatementRef[];
  [key: string]: unknown;
}

export interface ParetoPointDoc {
  replica_count: number;
  multiplicity: number;
  fraction: number;
  budget: number;
  cost: number;
  status: string;
  wall_time: number;
}

export interface RouteResponseDoc {
  query: string;
  replicas: number[];
  method: string;
  costs: Record<string, number>;
}

export interface SeriesEntryDoc {
  statement_index: number;
  improvement: number;
  solve_time: number;
  status: string;
}

export interface MonitorSeriesDoc {
  series: SeriesEntryDoc[];
  redeploy_count: number;
  observed: number;
  window_size: number;
  improvement_threshold: number;
  design: DesignDoc | null;
}

export type JobStatus = "queued" | "running" | "done" | "failed" | "cancelled";

export interface JobDoc {
  job_id: string;
  kind: string;
  status: JobStatus;
  submitted_at: number;
  finished_at: number | null;
  result: unknown;
  error: string | null;
}

export interface MaterializationDoc {
  budget: number;
  current: DesignDoc;
  target_replica_count?: number | null;
  new_replica_deploy_cost?: number;
}

export interface ConstraintSetDoc {
  space_budget?: number | null;
  materialization?: MaterializationDoc | null;
  [key: string]: unknown;
}

export interface SolverControlsDoc {
  gap_tolerance?: number;
  time_limit?: number | null;
}

export interface TuningRequestDoc {
  workload: WorkloadDoc;
  replica_count: number;
  multiplicity: number;
  failure_prob?: number;
  constraints?: ConstraintSetDoc;
  solver_controls?: SolverControlsDoc;
}

export interface ParetoRequestDoc {
  workload: WorkloadDoc;
  replica_counts: number[];
  multiplicity?: number;
  space_budget?: number | null;
  fractions?: number[];
  sync?: boolean;
}

export interface RouteRequestDoc {
  workload: WorkloadDoc;
  design: DesignDoc;
  query_id: string;
  multiplicity?: number;
  similarity?: boolean;
}

// Shared wire and view types for the annotation client.  All geometry
// math lives server-side; the client only ships pixel coordinates and
// renders what comes back.

export interface Point {
  u: number;
  v: number;
}

export type Role = 'left1' | 'left2' | 'right1' | 'right2' | 'pov';

export const ROLE_ORDER: Role[] = ['left1', 'left2', 'right1', 'right2', 'pov'];

export const ROLE_COLORS: Record<Role, string> = {
  left1: '#4dd465',
  left2: '#2e9e43',
  right1: '#5aa2ff',
  right2: '#2f6fd0',
  pov: '#ff5a5a',
};

export interface RangeEstimate {
  t_s: number;
  w: number | null;
  z_c_m: number | null;
  r_m: number | null;
  qualified: boolean;
}

export interface Overlay {
  left: [number, number][];
  right: [number, number][];
  width_segment: [number, number][];
}

export interface PointsResponse {
  range: RangeEstimate;
  overlay: Overlay | null;
}

export interface FramePoints {
  left: [number, number][];
  right: [number, number][];
  pov: [number, number];
}

export interface FrameInfo {
  t_s: number;
  image: string;
  points: FramePoints | null;
}

export interface EventSummary {
  event_id: string;
  direction: string;
  subset: string;
  t_lc_s: number;
  n_annotated: number;
  lane_width_m: number;
  trailer_length_m: number;
}

export interface EventDetail {
  event_id: string;
  direction: string;
  subset: string;
  t_start_s: number;
  t_lc_s: number;
  t_end_s: number;
  lane_width_m: number;
  trailer_length_m: number;
  frames: FrameInfo[];
}

export interface GapComputation {
  outcome: string;
  frames_qualified?: number;
  event_id?: string;
  direction?: string;
  r_lc_m?: number;
  rdot_mps?: number;
  delta_t_s?: number;
  t_n_s?: number;
  frames_used?: number;
  ttc_s?: number | null;
  d_req_mps2?: number;
  warning?: {
    ttc_warning: boolean;
    d_req_warning: boolean;
    range_warning: boolean;
  };
}

export interface PointsPayload {
  left: [number, number][];
  right: [number, number][];
  pov: [number, number];
  image?: string;
}

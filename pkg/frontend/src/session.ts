// Annotation session state machine.
//
// The operator clicks the five feature points in role order; once all
// five are placed the session auto-submits, and the service answers
// with the reprojected overlay and the live range estimate.  Re-picking
// any role replaces that point and resubmits.  The displayed range is
// always the latest service response; the client never computes ranges
// itself and never touches annotation files except through the API.

import { AnnotationApi } from './api.js';
import {
  EventDetail,
  EventSummary,
  FrameInfo,
  Overlay,
  Point,
  PointsResponse,
  RangeEstimate,
  Role,
  ROLE_ORDER,
} from './types.js';

export const FRAMES_REQUIRED = 7;

export interface SessionOptions {
  // image bounds for click rejection; unknown until the image loads
  imageWidth?: number;
  imageHeight?: number;
  // called before navigating away from unsaved picks; return true to discard
  confirmDiscard?: () => boolean;
}

export type NavigationDirection = 'next_frame' | 'prev_frame' | 'next_event' | 'prev_event';

export class AnnotationSession {
  events: EventSummary[] = [];
  eventIndex = -1;
  detail: EventDetail | null = null;
  frameIndex = 0;

  pending: Partial<Record<Role, Point>> = {};
  overlay: Overlay | null = null;
  range: RangeEstimate | null = null;
  dirty = false;
  inFlight = false;
  notice: string | null = null;

  private resubmitQueued = false;

  constructor(
    readonly api: AnnotationApi,
    readonly options: SessionOptions = {},
  ) {}

  static async open(api: AnnotationApi, options: SessionOptions = {}): Promise<AnnotationSession> {
    const session = new AnnotationSession(api, options);
    session.events = await api.listEvents();
    if (session.events.length > 0) {
      await session.openEvent(0);
    }
    return session;
  }

  get eventId(): string | null {
    return this.detail ? this.detail.event_id : null;
  }

  get frame(): FrameInfo | null {
    if (!this.detail || this.detail.frames.length === 0) return null;
    return this.detail.frames[this.frameIndex];
  }

  get pickedCount(): number {
    return ROLE_ORDER.filter((r) => this.pending[r] !== undefined).length;
  }

  get nextRole(): Role | null {
    return ROLE_ORDER.find((r) => this.pending[r] === undefined) ?? null;
  }

  annotatedFrameCount(): number {
    return this.detail ? this.detail.frames.filter((f) => f.points !== null).length : 0;
  }

  qualifies(): boolean {
    return this.annotatedFrameCount() >= FRAMES_REQUIRED;
  }

  async openEvent(index: number): Promise<void> {
    if (index < 0 || index >= this.events.length) {
      this.notice = 'no more events';
      return;
    }
    this.eventIndex = index;
    this.detail = await this.api.getEvent(this.events[index].event_id);
    this.frameIndex = 0;
    await this.loadFrameState();
  }

  // Seed picks from saved points and refresh overlay/range by
  // resubmitting them, so a reloaded frame shows the identical overlay.
  private async loadFrameState(): Promise<void> {
    this.pending = {};
    this.overlay = null;
    this.range = null;
    this.dirty = false;
    this.notice = null;
    const frame = this.frame;
    if (frame && frame.points) {
      const p = frame.points;
      this.pending = {
        left1: { u: p.left[0][0], v: p.left[0][1] },
        left2: { u: p.left[1][0], v: p.left[1][1] },
        right1: { u: p.right[0][0], v: p.right[0][1] },
        right2: { u: p.right[1][0], v: p.right[1][1] },
        pov: { u: p.pov[0], v: p.pov[1] },
      };
      await this.submit();
    }
  }

  private insideImage(p: Point): boolean {
    const { imageWidth, imageHeight } = this.options;
    if (imageWidth === undefined || imageHeight === undefined) return true;
    return p.u >= 0 && p.u < imageWidth && p.v >= 0 && p.v < imageHeight;
  }

  async pickPoint(role: Role, click: Point): Promise<void> {
    if (!this.frame) {
      this.notice = 'no frame loaded';
      return;
    }
    if (!this.insideImage(click)) {
      this.notice = `click outside image ignored (${click.u.toFixed(0)}, ${click.v.toFixed(0)})`;
      return;
    }
    this.pending[role] = click;
    this.dirty = true;
    this.notice = null;
    if (this.pickedCount === ROLE_ORDER.length) {
      await this.submit();
    }
  }

  // One submission at a time; a pick landing mid-flight queues exactly
  // one follow-up with the latest point set.
  private async submit(): Promise<void> {
    if (this.inFlight) {
      this.resubmitQueued = true;
      return;
    }
    const frame = this.frame;
    if (!frame || !this.detail || this.pickedCount < ROLE_ORDER.length) return;
    const p = this.pending as Record<Role, Point>;
    this.inFlight = true;
    try {
      const resp: PointsResponse = await this.api.submitPoints(this.detail.event_id, frame.t_s, {
        left: [
          [p.left1.u, p.left1.v],
          [p.left2.u, p.left2.v],
        ],
        right: [
          [p.right1.u, p.right1.v],
          [p.right2.u, p.right2.v],
        ],
        pov: [p.pov.u, p.pov.v],
        image: frame.image,
      });
      this.overlay = resp.overlay;
      this.range = resp.range;
      this.dirty = false;
      frame.points = {
        left: [
          [p.left1.u, p.left1.v],
          [p.left2.u, p.left2.v],
        ],
        right: [
          [p.right1.u, p.right1.v],
          [p.right2.u, p.right2.v],
        ],
        pov: [p.pov.u, p.pov.v],
      };
    } finally {
      this.inFlight = false;
    }
    if (this.resubmitQueued) {
      this.resubmitQueued = false;
      await this.submit();
    }
  }

  async navigate(direction: NavigationDirection): Promise<void> {
    if (this.dirty) {
      const confirm = this.options.confirmDiscard ?? (() => true);
      if (!confirm()) {
        this.notice = 'navigation cancelled; unsaved points kept';
        return;
      }
    }
    switch (direction) {
      case 'next_frame':
      case 'prev_frame': {
        if (!this.detail) return;
        const step = direction === 'next_frame' ? 1 : -1;
        const target = this.frameIndex + step;
        if (target < 0 || target >= this.detail.frames.length) {
          this.notice = 'no more frames in this event';
          return;
        }
        this.frameIndex = target;
        await this.loadFrameState();
        return;
      }
      case 'next_event':
      case 'prev_event': {
        const step = direction === 'next_event' ? 1 : -1;
        const target = this.eventIndex + step;
        if (target < 0 || target >= this.events.length) {
          this.notice = 'no more events in the catalog';
          return;
        }
        await this.openEvent(target);
        return;
      }
    }
  }
}

// Browser bootstrap: wires the canvas, click handling, and the status
// panel to the annotation session.

import { AnnotationApi } from './api.js';
import { canvasToImage, Ctx2D, renderOverlay, ViewTransform } from './overlay.js';
import { AnnotationSession, FRAMES_REQUIRED } from './session.js';
import { ROLE_ORDER } from './types.js';

const api = new AnnotationApi(window.location.origin);

const canvas = document.getElementById('frame-canvas') as HTMLCanvasElement;
const ctx = canvas.getContext('2d') as CanvasRenderingContext2D;
const rangeLabel = document.getElementById('range-label') as HTMLElement;
const roleLabel = document.getElementById('role-label') as HTMLElement;
const progressLabel = document.getElementById('progress-label') as HTMLElement;
const eventLabel = document.getElementById('event-label') as HTMLElement;
const noticeLabel = document.getElementById('notice-label') as HTMLElement;

const view: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
let session: AnnotationSession;
let frameImage: HTMLImageElement | null = null;

function fmt(x: number | null | undefined, digits = 2): string {
  return x === null || x === undefined ? '-' : x.toFixed(digits);
}

function redraw(): void {
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  ctx.fillStyle = '#15171c';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (frameImage) {
    ctx.drawImage(
      frameImage,
      view.offsetX,
      view.offsetY,
      frameImage.naturalWidth * view.scale,
      frameImage.naturalHeight * view.scale,
    );
  }
  renderOverlay(ctx as unknown as Ctx2D, session.overlay, session.pending, view, {
    dimmed: session.inFlight,
  });

  const r = session.range;
  rangeLabel.textContent = r
    ? `R = ${fmt(r.r_m)} m  (camera ${fmt(r.z_c_m)} m, qualified: ${r.qualified})`
    : 'R = - (awaiting five points)';
  roleLabel.textContent = session.nextRole
    ? `click role: ${session.nextRole}`
    : 'all five roles placed';
  const annotated = session.annotatedFrameCount();
  progressLabel.textContent =
    `frame ${session.frameIndex + 1}/${session.detail?.frames.length ?? 0} - ` +
    `picked ${session.pickedCount}/5 - annotated ${annotated}/${FRAMES_REQUIRED}` +
    (session.qualifies() ? ' (qualifies)' : '');
  eventLabel.textContent = session.eventId
    ? `${session.eventId} (${session.detail?.direction})`
    : 'no events';
  noticeLabel.textContent = session.notice ?? '';
}

async function loadFrameImage(): Promise<void> {
  frameImage = null;
  const frame = session.frame;
  if (!frame || !session.eventId) {
    redraw();
    return;
  }
  const img = new Image();
  img.onload = () => {
    frameImage = img;
    session.options.imageWidth = img.naturalWidth;
    session.options.imageHeight = img.naturalHeight;
    redraw();
  };
  img.onerror = () => {
    session.notice = 'frame image unavailable';
    redraw();
  };
  img.src = api.frameImageUrl(session.eventId, frame.t_s);
  redraw();
}

canvas.addEventListener('click', async (ev) => {
  const rect = canvas.getBoundingClientRect();
  const click = canvasToImage(
    { u: ev.clientX - rect.left, v: ev.clientY - rect.top },
    view,
  );
  const role = session.nextRole ?? 'pov';
  await session.pickPoint(role, click);
  redraw();
});

canvas.addEventListener('wheel', (ev) => {
  ev.preventDefault();
  const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
  view.scale *= factor;
  redraw();
});

function bindRoleButtons(): void {
  for (const role of ROLE_ORDER) {
    const button = document.getElementById(`repick-${role}`);
    button?.addEventListener('click', () => {
      delete session.pending[role];
      session.dirty = true;
      redraw();
    });
  }
}

function bindNavButtons(): void {
  const actions: [string, () => Promise<void>][] = [
    ['prev-frame', () => session.navigate('prev_frame')],
    ['next-frame', () => session.navigate('next_frame')],
    ['prev-event', () => session.navigate('prev_event')],
    ['next-event', () => session.navigate('next_event')],
  ];
  for (const [id, action] of actions) {
    document.getElementById(id)?.addEventListener('click', async () => {
      await action();
      await loadFrameImage();
    });
  }
  document.getElementById('compute-gap')?.addEventListener('click', async () => {
    if (!session.eventId) return;
    const gap = await api.computeGap(session.eventId);
    session.notice =
      gap.outcome === 'ok'
        ? `gap at lane change: R=${fmt(gap.r_lc_m)} m, Rdot=${fmt(gap.rdot_mps)} m/s, ` +
          `TTC=${fmt(gap.ttc_s ?? null)} s over ${gap.frames_used} frames`
        : `event not usable: ${gap.outcome}`;
    redraw();
  });
}

async function start(): Promise<void> {
  session = await AnnotationSession.open(api, {
    confirmDiscard: () => window.confirm('Discard unsaved points on this frame?'),
  });
  bindRoleButtons();
  bindNavButtons();
  await loadFrameImage();
}

start().catch((err) => {
  document.body.textContent = `failed to start: ${err}`;
});

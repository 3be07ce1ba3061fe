/**
 * Browser entry point: renders the reference and test stimuli on a canvas,
 * feeds pointer movement into the trial runtime, and downloads the session
 * export when the last trial ends.
 *
 * Timing note: trajectory samples lie on an exact 10 ms grid of the trial
 * clock; the state between input events is constant, so the only timing
 * error is the resolution of pointer-event timestamps.
 */
import { downloadSession } from "./export.js";
import { floralShapePoints } from "./geometry.js";
import { DOT_CIRCLE_RADIUS, defaultConfig, Session, type TaskKind } from "./session.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const canvas = byId<HTMLCanvasElement>("stage");
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("no 2d context");
const status = byId<HTMLDivElement>("status");
const startButton = byId<HTMLButtonElement>("start");

const params = new URLSearchParams(window.location.search);
const task = (params.get("task") === "shape" ? "shape" : "dot") as TaskKind;
const config = defaultConfig(task, {
  subjectId: params.get("subject") ?? "anon",
  nTrials: Number(params.get("n") ?? 40),
  nPractice: Number(params.get("practice") ?? 10),
  seed: Number(params.get("seed") ?? 1),
});

let session: Session | null = null;
let trialStart = 0;
let running = false;

const LEFT_CENTER = { x: 220, y: 240 };
const RIGHT_CENTER = { x: 620, y: 240 };

function drawDotPanel(center: { x: number; y: number }, a: number, b: number,
                      color: string): void {
  if (!ctx) return;
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.arc(center.x, center.y, DOT_CIRCLE_RADIUS, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(center.x + a, center.y - b, 3, 0, 2 * Math.PI);
  ctx.fill();
}

function drawShapePanel(center: { x: number; y: number }, a: number, b: number,
                        color: string): void {
  if (!ctx) return;
  const pts = floralShapePoints(a, b);
  ctx.strokeStyle = color;
  ctx.beginPath();
  pts.forEach((p, i) => {
    const x = center.x + p.x;
    const y = center.y - p.y;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.closePath();
  ctx.stroke();
}

function redraw(): void {
  if (!ctx || !session) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (session.finished) return;
  const plan = session.currentPlan;
  const state = runtimeState();
  if (task === "dot") {
    drawDotPanel(LEFT_CENTER, plan.alpha, plan.beta, "#c33");
    drawDotPanel(RIGHT_CENTER, state.a, state.b, "#36c");
  } else {
    drawShapePanel(LEFT_CENTER, plan.alpha, plan.beta, "#c33");
    drawShapePanel(RIGHT_CENTER, state.a, state.b, "#36c");
  }
}

let currentRuntime: ReturnType<Session["beginTrial"]> | null = null;

function runtimeState(): { a: number; b: number } {
  return currentRuntime ? currentRuntime.state : { a: 0, b: 0 };
}

function updateStatus(): void {
  if (!session) return;
  if (session.finished) {
    status.textContent = "session complete - export downloaded";
    return;
  }
  const i = session.completed.length + 1;
  const plan = session.currentPlan;
  const phase = plan.practice ? "practice" : "main";
  status.textContent = `${task} trial ${i}/${session.plans.length} (${phase}); ` +
    "match the reference, then press any mouse button";
}

function nextTrial(): void {
  if (!session) return;
  if (session.finished) {
    downloadSession(session);
    updateStatus();
    redraw();
    return;
  }
  currentRuntime = session.beginTrial();
  trialStart = performance.now();
  updateStatus();
  redraw();
}

canvas.addEventListener("pointermove", (ev) => {
  if (!running || !session || !currentRuntime) return;
  const t = Math.max(0, performance.now() - trialStart);
  const dx = task === "dot" ? ev.movementX : Math.sign(ev.movementX);
  const dy = task === "dot" ? -ev.movementY : -Math.sign(ev.movementY);
  if (dx !== 0 || dy !== 0) {
    session.step({ tMs: t, dx, dy });
    redraw();
  }
});

canvas.addEventListener("pointerdown", () => {
  if (!running || !session || !currentRuntime) return;
  const t = Math.max(1, performance.now() - trialStart);
  session.finishTrial(t);
  currentRuntime = null;
  window.setTimeout(nextTrial, 500);
});

startButton.addEventListener("click", () => {
  session = new Session(config);
  running = true;
  startButton.disabled = true;
  canvas.requestPointerLock?.();
  nextTrial();
});

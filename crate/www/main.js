import init, { Session, riccati_convergence } from "./pkg/smallnoise_wasm.js";

const $ = (id) => document.getElementById(id);
let session = null;

function params() {
  return {
    family: $("family").value,
    theta: parseFloat($("theta").value),
    eps: parseFloat($("eps").value),
    delta: parseFloat($("delta").value),
    y0: parseFloat($("y0").value),
    steps: parseInt($("steps").value, 10),
    seed: parseInt($("seed").value, 10) >>> 0,
  };
}

// Series: [{xs, ys, color, label}]
function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const s of series) {
    for (let i = 0; i < s.xs.length; i++) {
      if (!Number.isFinite(s.ys[i])) continue;
      x0 = Math.min(x0, s.xs[i]); x1 = Math.max(x1, s.xs[i]);
      y0 = Math.min(y0, s.ys[i]); y1 = Math.max(y1, s.ys[i]);
    }
  }
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const sx = (x) => pad + (x - x0) / (x1 - x0) * (w - 2 * pad);
  const sy = (y) => h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad);

  ctx.strokeStyle = "#999"; ctx.fillStyle = "#444"; ctx.font = "11px sans-serif";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);

  series.forEach((s, k) => {
    // thin long series to about one point per pixel
    const stride = Math.max(1, Math.floor(s.xs.length / (w - 2 * pad)));
    ctx.strokeStyle = s.color; ctx.beginPath();
    for (let i = 0; i < s.xs.length; i += stride) {
      const px = sx(s.xs[i]), py = sy(s.ys[i]);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    }
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, pad + 8 + 110 * k, pad - 8);
  });
  if (opts.vline !== undefined) {
    ctx.strokeStyle = "#c00"; ctx.setLineDash([4, 3]); ctx.beginPath();
    ctx.moveTo(sx(opts.vline), pad); ctx.lineTo(sx(opts.vline), h - pad); ctx.stroke();
    ctx.setLineDash([]);
  }
}

function guard(fn) {
  return () => {
    $("error").textContent = "";
    try { fn(); } catch (e) { $("error").textContent = String(e.message ?? e); }
  };
}

function simulate() {
  const p = params();
  if (session) session.free();
  session = new Session(p.family, p.y0, p.theta, p.eps, p.delta, p.steps, p.seed);
  const t = session.t();
  const x = session.x(), y = session.y(), m = session.m(), g = session.gamma_star();
  const scale = Math.max(...y.map(Math.abs), 1e-300) / Math.max(...x.map(Math.abs), 1e-300);
  plot($("path-plot"), [
    { xs: t, ys: y, color: "#1f77b4", label: "Y (hidden)" },
    { xs: t, ys: m, color: "#ff7f0e", label: "m (filter)" },
    { xs: t, ys: x.map((v) => v * scale), color: "#2ca02c", label: "X (rescaled)" },
  ]);
  $("sim-info").textContent = ` ψ = ${session.psi().toPrecision(4)}, γ*(T) = ${g[g.length - 1].toPrecision(4)}`;
  $("profile-info").textContent = "";
}

function profile() {
  if (!session) simulate();
  const flat = session.likelihood_profile(80);
  const th = [], ll = [];
  for (let i = 0; i < flat.length; i += 2) { th.push(flat[i]); ll.push(flat[i + 1]); }
  const top = Math.max(...ll);
  const est = session.estimate_mle();
  plot($("profile-plot"), [{ xs: th, ys: ll.map((v) => v - top), color: "#9467bd", label: "log L(θ) − max" }], { vline: est });
  $("profile-info").textContent = ` MLE θ̂ = ${est.toPrecision(5)} on [${session.theta_min()}, ${session.theta_max()}]`;
}

function riccati() {
  const p = params();
  const rows = riccati_convergence(p.family, p.theta, p.delta, 0.1);
  let text = "ε          ε/ψ         sup|γ*−γ₀|   ratio\n";
  for (let i = 0; i < rows.length; i += 3) {
    const [e, r, s] = [rows[i], rows[i + 1], rows[i + 2]];
    text += `${e.toExponential(1).padEnd(10)} ${r.toExponential(3).padEnd(11)} ${s.toExponential(3).padEnd(12)} ${(s / r).toFixed(4)}\n`;
  }
  $("riccati-table").textContent = text;
}

await init();
$("run-sim").onclick = guard(simulate);
$("run-profile").onclick = guard(profile);
$("run-riccati").onclick = guard(riccati);
guard(simulate)();

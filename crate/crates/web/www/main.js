import init, { trajectory, convergence, costs } from "./pkg/mckean_mlp_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function records(flat, width) {
  const rows = [];
  for (let i = 0; i < flat.length; i += width) rows.push(Array.from(flat.slice(i, i + width)));
  return rows;
}

// series: [{ points: [[x, y]], color, marker, band: [[x, lo, hi]] }]
function plot(canvas, series, xlabel) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const xs = [], ys = [];
  for (const s of series) {
    for (const [x, y] of s.points) { xs.push(x); ys.push(y); }
    for (const [x, lo, hi] of s.band || []) { xs.push(x); ys.push(lo, hi); }
  }
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (x0 === x1) { x0 -= 1; x1 += 1; }
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (W - 2 * pad);
  const sy = (y) => H - pad - ((y - y0) / (y1 - y0)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, H - pad);
  ctx.fillText(x0.toPrecision(3), pad, H - pad + 14);
  ctx.fillText(x1.toPrecision(3), W - pad - 20, H - pad + 14);
  ctx.fillText(xlabel, W / 2, H - 8);

  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    for (const [x, lo, hi] of s.band || []) {
      ctx.beginPath();
      ctx.moveTo(sx(x), sy(lo));
      ctx.lineTo(sx(x), sy(hi));
      ctx.stroke();
    }
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
    if (s.marker) for (const [x, y] of s.points) ctx.fillRect(sx(x) - 2, sy(y) - 2, 4, 4);
  }
}

function guarded(errId, f) {
  return () => {
    $(errId).textContent = "";
    try { f(); } catch (e) { $(errId).textContent = String(e.message || e); }
  };
}

const drawTrajectory = guarded("terr", () => {
  const rows = records(trajectory(num("tn"), num("tm"), num("tb"), num("txi"), num("tseed")), 3);
  plot($("tplot"), [
    { points: rows.map((r) => [r[0], r[1]]), color: "#1f77b4", marker: true },
    { points: rows.map((r) => [r[0], r[2]]), color: "#d62728" },
  ], "t");
});

const drawConvergence = guarded("cerr", () => {
  const rows = records(convergence(num("ck"), num("creps"), num("cb"), num("cxi"), num("cseed")), 4);
  const ln = (v) => Math.log(Math.max(v, 1e-300));
  plot($("cplot"), [
    {
      points: rows.map((r) => [r[0], ln(r[1])]),
      band: rows.map((r) => [r[0], ln(r[1] - r[2]), ln(r[1] + r[2])]),
      color: "#1f77b4",
      marker: true,
    },
    { points: rows.map((r) => [r[0], r[3]]), color: "#2ca02c", marker: true },
  ], "k = n = m");
  $("ctable").textContent = "k   rmse      ±95%      bound\n" + rows
    .map((r) => `${r[0]}   ${r[1].toFixed(5)}   ${r[2].toFixed(5)}   ${Math.exp(r[3]).toPrecision(5)}`)
    .join("\n");
});

const drawCosts = guarded("kerr", () => {
  const rows = records(costs(num("kn"), num("km"), num("kd")), 3);
  plot($("kplot"), [
    { points: rows.map((r) => [r[0], r[1]]), color: "#1f77b4", marker: true },
    { points: rows.map((r) => [r[0], r[2]]), color: "#2ca02c", marker: true },
  ], "n");
});

await init();
$("trun").onclick = drawTrajectory;
$("crun").onclick = drawConvergence;
$("krun").onclick = drawCosts;
drawTrajectory();
drawConvergence();
drawCosts();

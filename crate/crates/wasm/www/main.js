import init, { phi_curve, density_trajectory, counterexample } from "./pkg/summa_wasm.js";

const MODULI = ["identity", "powsum", "powlog", "xpluslog", "xratio", "log1p", "lambertw"];
const THETAS = ["geo2", "geo1.5", "poly2", "sgeo"];
const $ = (id) => document.getElementById(id);

function fill(id, items, first) {
  const sel = $(id);
  for (const v of (first ? [first, ...items] : items)) {
    const o = document.createElement("option");
    o.textContent = v;
    sel.appendChild(o);
  }
}

// (x, y) pairs on a log-x axis, y in [0, max(1, ymax)]
function plot(canvas, points) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pts = points.filter(([x, y]) => x > 0 && Number.isFinite(y));
  if (pts.length < 2) return;
  const lx = pts.map(([x]) => Math.log10(x));
  const x0 = Math.min(...lx), x1 = Math.max(...lx);
  const ymax = Math.max(1, ...pts.map(([, y]) => y));
  const px = (x) => 30 + ((Math.log10(x) - x0) / (x1 - x0 || 1)) * (w - 40);
  const py = (y) => h - 20 - (y / ymax) * (h - 30);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(30, py(0)); ctx.lineTo(w - 10, py(0));
  ctx.moveTo(30, py(0)); ctx.lineTo(30, py(ymax));
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.fillText(ymax.toFixed(2), 2, py(ymax) + 4);
  ctx.fillText("0", 18, py(0) + 4);
  ctx.fillText(`10^${x0.toFixed(0)}`, 30, h - 4);
  ctx.fillText(`10^${x1.toFixed(0)}`, w - 50, h - 4);
  ctx.strokeStyle = "#1565c0";
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y))));
  ctx.stroke();
}

function run(out, f) {
  const el = $(out);
  el.classList.remove("err");
  try {
    const v = JSON.parse(f());
    el.textContent = JSON.stringify(v, null, 2);
    return v;
  } catch (e) {
    el.classList.add("err");
    el.textContent = String(e);
    return null;
  }
}

await init();
fill("phi-f", MODULI); fill("d-f", MODULI); fill("c-f", MODULI);
fill("phi-theta", THETAS, "none"); fill("d-theta", THETAS, "none"); fill("c-theta", THETAS);
$("phi-f").value = "log1p";
$("c-f").value = "log1p";

$("phi-go").onclick = () => {
  const v = run("phi-out", () =>
    phi_curve($("phi-f").value, Number($("phi-eps").value), Number($("phi-h").value), $("phi-theta").value));
  if (v) plot($("phi-plot"), v.trajectory);
};
$("d-go").onclick = () => {
  const v = run("d-out", () =>
    density_trajectory($("d-set").value, $("d-f").value, $("d-theta").value, Number($("d-h").value)));
  if (v) plot($("d-plot"), v.trajectory);
};
$("c-go").onclick = () => {
  run("c-out", () => counterexample($("c-kind").value, $("c-f").value, $("c-theta").value));
};

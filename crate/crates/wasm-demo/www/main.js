import init, { risk_curves, sure_curves, heatmaps } from "./pkg/surecov_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function model() {
  return [$("family").value, num("p"), num("rho"), num("alpha"), num("k0"), num("offdiag")];
}

function guarded(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = e.message ?? String(e);
    }
  };
}

// Line chart with a shared x axis; series = [{ label, color, values, marker }].
function lineChart(canvas, xs, series) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = { l: 60, r: 12, t: 10, b: 28 };
  ctx.clearRect(0, 0, W, H);
  const all = series.flatMap((s) => s.values).filter(Number.isFinite);
  let lo = Math.min(...all), hi = Math.max(...all);
  if (hi === lo) { hi += 1; lo -= 1; }
  const x = (v) => pad.l + ((v - xs[0]) / Math.max(1, xs[xs.length - 1] - xs[0])) * (W - pad.l - pad.r);
  const y = (v) => H - pad.b - ((v - lo) / (hi - lo)) * (H - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t);
  ctx.lineTo(pad.l, H - pad.b);
  ctx.lineTo(W - pad.r, H - pad.b);
  ctx.stroke();
  for (let k = 0; k <= 4; k++) {
    const v = lo + ((hi - lo) * k) / 4;
    ctx.fillText(v.toPrecision(4), 4, y(v) + 4);
  }
  const step = Math.max(1, Math.ceil(xs.length / 15));
  xs.forEach((t, i) => { if (i % step === 0) ctx.fillText(String(t), x(t) - 4, H - 10); });

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(x(xs[i]), y(v)) : ctx.moveTo(x(xs[i]), y(v))));
    ctx.stroke();
    if (s.marker !== undefined) {
      const i = xs.indexOf(s.marker);
      ctx.fillStyle = s.color;
      ctx.beginPath();
      ctx.arc(x(xs[i]), y(s.values[i]), 5, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}

function legend(el, series) {
  el.innerHTML = series
    .map((s) => `<span style="color:${s.color}">&#9632; ${s.label}</span>`)
    .join("");
}

// Diverging blue/white/red map, symmetric around zero.
function heatmap(canvas, p, values, scale) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(p, p);
  for (let k = 0; k < p * p; k++) {
    const v = Math.max(-1, Math.min(1, values[k] / scale));
    const a = Math.round(255 * (1 - Math.abs(v)));
    const o = 4 * k;
    img.data[o] = v < 0 ? a : 255;
    img.data[o + 1] = a;
    img.data[o + 2] = v > 0 ? a : 255;
    img.data[o + 3] = 255;
  }
  const tmp = new OffscreenCanvas(p, p);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function runRisk() {
  const r = JSON.parse(risk_curves(...model(), num("n"), $("risk-c").value, num("risk-taumax")));
  const series = [
    { label: `banding, oracle tau ${r.oracle_banding}`, color: "#1f77b4", values: r.banding, marker: r.oracle_banding },
    { label: `tapering, oracle tau ${r.oracle_czz}`, color: "#d62728", values: r.czz, marker: r.oracle_czz },
  ];
  lineChart($("risk-canvas"), r.tau, series);
  legend($("risk-legend"), series);
}

function runSure() {
  const r = JSON.parse(
    sure_curves(...model(), num("n"), $("sure-scheme").value, $("sure-c").value, num("sure-taumax"), num("sure-seed")),
  );
  const series = [
    { label: `SURE (c = ${r.c.toPrecision(4)}), selected tau ${r.tau_hat}`, color: "#2ca02c", values: r.sure, marker: r.tau_hat },
    { label: "realized loss", color: "#ff7f0e", values: r.loss },
    { label: `risk, oracle tau ${r.oracle_tau}`, color: "#555", values: r.risk, marker: r.oracle_tau },
  ];
  lineChart($("sure-canvas"), r.tau, series);
  legend($("sure-legend"), series);
}

function runHeat() {
  const r = JSON.parse(heatmaps(...model(), num("n"), $("heat-scheme").value, num("heat-tau"), num("heat-seed")));
  const scale = Math.max(...r.truth.map(Math.abs));
  heatmap($("heat-truth"), r.p, r.truth, scale);
  heatmap($("heat-sample"), r.p, r.sample, scale);
  heatmap($("heat-estimate"), r.p, r.estimate, scale);
  $("heat-sample-note").textContent = `sample covariance, loss ${r.sample_loss.toFixed(3)}`;
  $("heat-estimate-note").textContent = `tapered at tau ${r.tau}, loss ${r.estimate_loss.toFixed(3)}`;
}

await init();
$("run-risk").addEventListener("click", guarded(runRisk));
$("run-sure").addEventListener("click", guarded(runSure));
$("run-heat").addEventListener("click", guarded(runHeat));
guarded(runRisk)();
guarded(runSure)();
guarded(runHeat)();

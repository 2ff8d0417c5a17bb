import init, { dynamism_walkthrough, qf_curve, space_timeline_json } from "./pkg/nstore_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function call(f, ...args) {
  const v = JSON.parse(f(...args));
  if (v.error) throw new Error(v.error);
  return v;
}

// series: [{name, cls, points: [[x, y], ...]}]
function chart(series, { xLabel, yLabel, yMax }) {
  const W = 880, H = 320, L = 60, R = 110, T = 15, B = 40;
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y1 = yMax ?? Math.max(...ys);
  const sx = (x) => L + ((x - x0) / (x1 - x0 || 1)) * (W - L - R);
  const sy = (y) => H - B - (y / (y1 || 1)) * (H - T - B);
  let svg = `<svg width="${W}" height="${H}" xmlns="http://www.w3.org/2000/svg">`;
  svg += `<line x1="${L}" y1="${H - B}" x2="${W - R}" y2="${H - B}" stroke="#444"/>`;
  svg += `<line x1="${L}" y1="${T}" x2="${L}" y2="${H - B}" stroke="#444"/>`;
  for (let i = 0; i <= 4; i++) {
    const y = (y1 * i) / 4;
    svg += `<text x="${L - 6}" y="${sy(y) + 4}" font-size="11" text-anchor="end">${+y.toFixed(2)}</text>`;
  }
  svg += `<text x="${L}" y="${H - 8}" font-size="11">${x0}</text>`;
  svg += `<text x="${W - R}" y="${H - 8}" font-size="11" text-anchor="end">${x1}</text>`;
  svg += `<text x="${(L + W - R) / 2}" y="${H - 8}" font-size="12" text-anchor="middle">${xLabel}</text>`;
  svg += `<text x="12" y="${T + 10}" font-size="12">${yLabel}</text>`;
  series.forEach((s, i) => {
    const d = s.points.map((p, j) => `${j ? "L" : "M"}${sx(p[0]).toFixed(1)},${sy(p[1]).toFixed(1)}`).join("");
    svg += `<path d="${d}" fill="none" class="${s.cls}" stroke-width="2"/>`;
    svg += `<text x="${W - R + 10}" y="${T + 15 + i * 18}" font-size="12" class="${s.cls}">${s.name}</text>`;
  });
  return svg + "</svg>";
}

function setupWalkthrough() {
  const w = call(dynamism_walkthrough);
  let i = 0;
  const show = () => {
    $("walk-label").textContent = i === 0 ? "initial state" : `after op ${i} of ${w.steps.length}`;
    const s = w.steps[i - 1];
    $("walk-step").textContent = s
      ? `${s.action}\noutcome ${s.outcome}, cost ${s.cost}, examined [${s.examined.join(", ")}], dn ${s.dn_id ?? "-"}`
      : "fixture before any op";
    $("walk-state").textContent = w.states[i];
  };
  $("walk-prev").onclick = () => { i = Math.max(0, i - 1); show(); };
  $("walk-next").onclick = () => { i = Math.min(w.steps.length, i + 1); show(); };
  show();
}

function runQf() {
  const v = call(qf_curve, num("qf-seed"), num("qf-items"), num("qf-retrievals"), num("qf-bias"));
  const pts = (k) => v.curves[k].map((p) => [+(p.cap_bytes / v.full_bytes).toFixed(2), p.quality_factor]);
  $("qf-chart").innerHTML = chart(
    [{ name: "NS", cls: "ns", points: pts("ns") }, { name: "CAM", cls: "cam", points: pts("cam") }],
    { xLabel: "cap / corpus size", yLabel: "quality factor", yMax: 1 },
  );
}

function runSpace() {
  const v = call(space_timeline_json, num("sp-seed"), num("sp-items"), num("sp-retrievals"), num("sp-tail"));
  $("sp-chart").innerHTML = chart(
    [{ name: "NS", cls: "ns", points: v.ns }, { name: "CAM", cls: "cam", points: v.cam }],
    { xLabel: "op", yLabel: "bytes" },
  );
}

function guarded(f, target) {
  return () => {
    try { f(); } catch (e) { $(target).textContent = e.message; }
  };
}

await init();
$("status").textContent = "";
guarded(setupWalkthrough, "walk-step")();
$("qf-run").onclick = guarded(runQf, "qf-chart");
$("sp-run").onclick = guarded(runSpace, "sp-chart");

import init, { tetra_slice, classify_unital, discord_landscape, da_demo } from "./pkg/discord_channels_web.js";

const N = 81;
const $ = (id) => document.getElementById(id);
const call = (f, ...args) => {
  const v = JSON.parse(f(...args));
  if (v.error) throw new Error(v.error);
  return v;
};

function drawSlice() {
  const l3 = parseFloat($("l3").value);
  $("l3v").textContent = l3.toFixed(2);
  const { cells } = call(tetra_slice, l3, N);
  const ctx = $("slice").getContext("2d");
  const s = $("slice").width / N;
  ctx.clearRect(0, 0, $("slice").width, $("slice").height);
  cells.forEach((cell, k) => {
    if (!cell) return;
    const i = k % N, j = Math.floor(k / N);
    ctx.fillStyle = cell.db_b ? "#222" : cell.db_a ? "#d33" : cell.eb === "yes" ? "#9cd" : "#eee";
    // λ₂ grows upwards.
    ctx.fillRect(i * s, (N - 1 - j) * s, Math.ceil(s), Math.ceil(s));
  });
}

$("slice").addEventListener("click", (e) => {
  const r = e.target.getBoundingClientRect();
  const l1 = -1 + (2 * (e.clientX - r.left)) / r.width;
  const l2 = 1 - (2 * (e.clientY - r.top)) / r.height;
  const l3 = parseFloat($("l3").value);
  try {
    const v = call(classify_unital, l1, l2, l3);
    $("classify").textContent =
      `λ = (${l1.toFixed(3)}, ${l2.toFixed(3)}, ${l3.toFixed(3)})\n` +
      `side A: ${v.side_a.label}\nside B: ${v.side_b.label}\n` +
      `entanglement breaking: ${v.side_a.entanglement_breaking.kind}\n\n` +
      JSON.stringify(v.side_a.verdict, null, 1);
  } catch (err) {
    $("classify").textContent = err.message;
  }
});

function drawCurve(canvas, points, color) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const ys = points.map((p) => p[1]);
  const lo = Math.min(0, ...ys), hi = Math.max(...ys, 1e-9);
  ctx.strokeStyle = color;
  ctx.beginPath();
  points.forEach(([x, y], k) => {
    const px = (k / (points.length - 1)) * (w - 20) + 10;
    const py = h - 10 - ((y - lo) / (hi - lo)) * (h - 20);
    k ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
  });
  ctx.stroke();
}

function runDiscord() {
  const c = ["c1", "c2", "c3"].map((id) => parseFloat($(id).value));
  try {
    const v = call(discord_landscape, ...c, 181);
    $("discord-summary").textContent =
      `D(B|A) = ${v.discord.toFixed(6)} bits, I = ${v.mutual_information.toFixed(6)}, ` +
      `classical-quantum: ${v.cq_exact}. Curve: J(B|A) against the polar angle of the measurement.`;
    drawCurve($("landscape"), v.curve, "#36c");
  } catch (err) {
    $("discord-summary").textContent = err.message;
  }
}

function runDa() {
  const [a, b] = $("dims").value.split("x").map(Number);
  try {
    const v = call(da_demo, a, b, BigInt($("seed").value));
    const sv = v.singular_values;
    const ctx = $("sv").getContext("2d");
    const w = $("sv").width, h = $("sv").height, bw = w / sv.length;
    ctx.clearRect(0, 0, w, h);
    sv.forEach((x, k) => {
      ctx.fillStyle = x < 1e-8 ? "#d33" : "#36c";
      const bh = Math.max(1, x * (h - 10));
      ctx.fillRect(k * bw + 1, h - bh, bw - 2, bh);
    });
    $("da").textContent =
      `block signature (rank, leaves B unchanged): ${JSON.stringify(v.signature)}\n` +
      `transfer singular values below 1e-8: ${sv.filter((x) => x < 1e-8).length} of ${sv.length}\n` +
      `certified outputs: ${v.certify.samples - v.certify.failures}/${v.certify.samples}` +
      ` (worst CQ residual ${v.certify.worst_cq_residual.toExponential(2)})\n` +
      `identity control failures: ${v.identity_control.failures}/${v.identity_control.samples}`;
  } catch (err) {
    $("da").textContent = err.message;
  }
}

await init();
$("l3").addEventListener("input", drawSlice);
$("run-discord").addEventListener("click", runDiscord);
$("run-da").addEventListener("click", runDa);
drawSlice();
runDiscord();
runDa();

import init, { classNames, imageSide, phantomRgba, reverseHistogram, ToyGan } from "./pkg/cellprobe_demo.js";

const $ = (id) => document.getElementById(id);
const seedOf = (id) => BigInt(Math.max(0, Math.floor(Number($(id).value) || 0)));
const COLOURS = ["#1f77b4", "#d62728"];

function phantomCanvas(cls, seed) {
  const side = imageSide();
  const canvas = document.createElement("canvas");
  canvas.width = canvas.height = side;
  canvas.style.width = canvas.style.height = `${side * 2}px`;
  canvas.title = classNames()[cls];
  const rgba = new Uint8ClampedArray(phantomRgba(cls, seed));
  canvas.getContext("2d").putImageData(new ImageData(rgba, side, side), 0, 0);
  return canvas;
}

function showPhantoms(classes) {
  const out = $("ph-out");
  out.replaceChildren(...classes.map((c) => phantomCanvas(c, seedOf("ph-seed"))));
}

function drawHistogram(run) {
  const canvas = $("rv-plot");
  const ctx = canvas.getContext("2d");
  const [edges, emp, ana] = [run.edges(), run.empirical(), run.analytic()];
  const top = Math.max(...emp, ...ana) * 1.1;
  const x = (v) => ((v - edges[0]) / (edges[edges.length - 1] - edges[0])) * canvas.width;
  const y = (d) => canvas.height - (d / top) * canvas.height;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#9ecae1";
  emp.forEach((d, i) => ctx.fillRect(x(edges[i]), y(d), x(edges[i + 1]) - x(edges[i]) - 1, canvas.height - y(d)));
  ctx.strokeStyle = "#d62728";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ana.forEach((d, i) => {
    const cx = x((edges[i] + edges[i + 1]) / 2);
    i === 0 ? ctx.moveTo(cx, y(d)) : ctx.lineTo(cx, y(d));
  });
  ctx.stroke();
}

function runReverse() {
  const mean = Number($("rv-mean").value);
  const variance = Number($("rv-var").value);
  const t0 = performance.now();
  const run = reverseHistogram(mean, variance, Number($("rv-steps").value), Number($("rv-n").value), 40, 7n);
  drawHistogram(run);
  $("rv-out").textContent =
    `sample mean ${run.mean.toFixed(4)} (target ${mean}), variance ${run.variance.toFixed(4)} ` +
    `(target ${variance}); ${(performance.now() - t0).toFixed(0)} ms`;
  run.free();
}

let gan = null;

function drawGan() {
  const canvas = $("gan-plot");
  const ctx = canvas.getContext("2d");
  const x = (v) => ((v + 4) / 8) * canvas.width;
  const y = (v) => canvas.height / 2 - (v / 2) * (canvas.height / 2);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const data = gan.data();
  const labels = gan.labels();
  ctx.globalAlpha = 0.15;
  labels.forEach((l, i) => {
    ctx.fillStyle = COLOURS[l];
    ctx.fillRect(x(data[2 * i]) - 1, y(data[2 * i + 1]) - 1, 2, 2);
  });
  ctx.globalAlpha = 0.8;
  for (const cls of [0, 1]) {
    const s = gan.sample(cls, 300, BigInt(gan.epochs + cls));
    ctx.strokeStyle = COLOURS[cls];
    for (let i = 0; i < s.length; i += 2) {
      ctx.strokeRect(x(s[i]) - 1.5, y(s[i + 1]) - 1.5, 3, 3);
    }
  }
  ctx.globalAlpha = 1;
  const acc = gan.conditioning(500, 99n);
  $("gan-out").textContent =
    `${gan.epochs} epochs; ${(100 * acc).toFixed(1)}% of samples land nearer their own class centre ` +
    `(dots: training data, squares: generated)`;
}

function resetGan() {
  gan?.free();
  gan = new ToyGan(seedOf("gan-seed"));
  drawGan();
}

async function main() {
  await init();
  const select = $("ph-class");
  classNames().forEach((name, i) => select.add(new Option(name, String(i))));
  $("ph-go").onclick = () => showPhantoms([Number(select.value)]);
  $("ph-all").onclick = () => showPhantoms(classNames().map((_, i) => i));
  $("rv-go").onclick = runReverse;
  $("gan-reset").onclick = resetGan;
  $("gan-train").onclick = () => {
    gan.train(10);
    drawGan();
  };
  showPhantoms(classNames().map((_, i) => i));
  runReverse();
  resetGan();
  $("status").textContent = "ready";
}

main().catch((e) => {
  $("status").textContent = `failed to start: ${e}`;
});

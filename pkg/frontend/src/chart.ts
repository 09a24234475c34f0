import type { ChartSpec } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 480;
const HEIGHT = 220;
const MARGIN = { top: 28, right: 12, bottom: 48, left: 44 };

function errorCard(message: string): HTMLElement {
  const card = document.createElement("div");
  card.className = "chart-error";
  card.textContent = message;
  return card;
}

/** Draws a bar chart from the given ChartSpec; malformed chart data yields an error
 *  card instead of a broken drawing. */
export function renderBarChart(spec: ChartSpec): HTMLElement {
  if (spec.kind !== "bar") {
    return errorCard(`unsupported chart kind: ${spec.kind}`);
  }
  if (spec.labels.length !== spec.values.length) {
    return errorCard("chart data is inconsistent: label and value counts differ");
  }
  if (spec.values.some((v) => !Number.isFinite(v))) {
    return errorCard("chart data is inconsistent: non-finite value");
  }

  const wrapper = document.createElement("figure");
  wrapper.className = "chart";

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", spec.title);

  const plotWidth = WIDTH - MARGIN.left - MARGIN.right;
  const plotHeight = HEIGHT - MARGIN.top - MARGIN.bottom;
  const maxValue = Math.max(...spec.values, 0) || 1;
  const slot = plotWidth / spec.labels.length;
  const barWidth = Math.min(slot * 0.7, 80);

  const title = document.createElementNS(SVG_NS, "text");
  title.setAttribute("x", String(WIDTH / 2));
  title.setAttribute("y", "18");
  title.setAttribute("text-anchor", "middle");
  title.setAttribute("class", "chart-title");
  title.textContent = spec.title;
  svg.appendChild(title);

  const axisLabel = document.createElementNS(SVG_NS, "text");
  axisLabel.setAttribute("x", "12");
  axisLabel.setAttribute("y", String(MARGIN.top - 6));
  axisLabel.setAttribute("class", "chart-axis-label");
  axisLabel.textContent = spec.value_axis_label;
  svg.appendChild(axisLabel);

  spec.labels.forEach((label, i) => {
    const value = spec.values[i];
    const barHeight = (value / maxValue) * plotHeight;
    const x = MARGIN.left + i * slot + (slot - barWidth) / 2;
    const y = MARGIN.top + plotHeight - barHeight;

    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("class", "chart-bar");
    rect.setAttribute("x", String(x));
    rect.setAttribute("y", String(y));
    rect.setAttribute("width", String(barWidth));
    rect.setAttribute("height", String(barHeight));
    svg.appendChild(rect);

    const valueText = document.createElementNS(SVG_NS, "text");
    valueText.setAttribute("x", String(x + barWidth / 2));
    valueText.setAttribute("y", String(y - 4));
    valueText.setAttribute("text-anchor", "middle");
    valueText.setAttribute("class", "chart-value");
    valueText.textContent = String(value);
    svg.appendChild(valueText);

    const labelText = document.createElementNS(SVG_NS, "text");
    labelText.setAttribute("x", String(x + barWidth / 2));
    labelText.setAttribute("y", String(MARGIN.top + plotHeight + 18));
    labelText.setAttribute("text-anchor", "middle");
    labelText.setAttribute("class", "chart-label");
    labelText.textContent = label;
    svg.appendChild(labelText);
  });

  wrapper.appendChild(svg);
  return wrapper;
}

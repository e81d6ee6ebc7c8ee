// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const cols = d3.max(data, d => d.col) + 1;
const rows = d3.max(data, d => d.row) + 1;
const cell = Math.min(innerW / cols, innerH / rows);
const color = d3.scaleSequential(d3.interpolateBlues).domain(d3.extent(data, d => d.rate));
g.selectAll("rect.region").data(data).join("rect").attr("class", "region")
  .attr("x", d => d.col * cell).attr("y", d => d.row * cell).attr("width", cell - 2).attr("height", cell - 2)
  .attr("fill", d => color(d.rate));
g.selectAll("text.region-label").data(data).join("text").attr("class", "region-label")
  .attr("x", d => d.col * cell + 4).attr("y", d => d.row * cell + 14).text(d => d.region);

// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const radius = Math.min(innerW, innerH) / 2;
const color = d3.scaleOrdinal().domain(data.map(d => d.segment)).range(["#d62728", "#d62728", "#ff9896", "#1f77b4"]);
const arcs = d3.pie().sort(null).value(d => d.share)(data);
const arc = d3.arc().innerRadius(0).outerRadius(radius);
const pieG = g.append("g").attr("transform", `translate(${innerW / 2},${innerH / 2})`);
pieG.selectAll("path.slice").data(arcs).join("path").attr("class", "slice")
  .attr("d", arc).attr("fill", d => color(d.data.segment));
pieG.selectAll("text").data(arcs).join("text").attr("transform", d => `translate(${arc.centroid(d)})`)
  .text(d => d.data.segment);

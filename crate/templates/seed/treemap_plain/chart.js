// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const shown = data;
const root = d3.hierarchy({ children: shown }).sum(d => d.budget);
d3.treemap().size([innerW, innerH]).padding(2)(root);
const color = d3.scaleOrdinal(d3.schemeTableau10);
const leaves = g.selectAll("g.leaf").data(root.leaves()).join("g").attr("class", "leaf")
  .attr("transform", d => `translate(${d.x0},${d.y0})`);
leaves.append("rect").attr("width", d => d.x1 - d.x0).attr("height", d => d.y1 - d.y0)
  .attr("fill", d => color(d.data.department));
leaves.append("text").attr("x", 4).attr("y", 14).text(d => d.data.department);

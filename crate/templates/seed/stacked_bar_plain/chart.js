// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const keys = ["online", "in_store"];
const series = d3.stack().keys(keys)(data);
const x = d3.scaleBand().domain(data.map(d => d.quarter)).range([0, innerW]).padding(0.2);
const y = d3.scaleLinear().domain([0, d3.max(data, d => d.online + d.in_store)]).range([innerH, 0]);
const color = d3.scaleOrdinal().domain(keys).range(["#4e79a7", "#f28e2b"]);
g.append("g").attr("transform", `translate(0,${innerH})`).call(d3.axisBottom(x));
g.append("g").call(d3.axisLeft(y));
g.selectAll("g.layer").data(series).join("g").attr("class", "layer").attr("fill", d => color(d.key))
  .selectAll("rect.bar").data(d => d).join("rect").attr("class", "bar")
  .attr("x", d => x(d.data.quarter)).attr("y", d => y(d[1]))
  .attr("height", d => y(d[0]) - y(d[1])).attr("width", x.bandwidth());

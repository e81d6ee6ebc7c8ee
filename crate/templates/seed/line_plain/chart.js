// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const x = d3.scalePoint().domain(data.map(d => d.month)).range([0, innerW]);
const y = d3.scaleLinear().domain([0, d3.max(data, d => d.temperature)]).nice().range([innerH, 0]);
g.append("g").attr("transform", `translate(0,${innerH})`).call(d3.axisBottom(x));
g.append("g").call(d3.axisLeft(y));
g.append("path").datum(data).attr("fill", "none").attr("stroke", "#e15759").attr("stroke-width", 2)
  .attr("d", d3.line().x(d => x(d.month)).y(d => y(d.temperature)));
g.selectAll("circle.point").data(data).join("circle").attr("class", "point")
  .attr("cx", d => x(d.month)).attr("cy", d => y(d.temperature)).attr("r", 3);

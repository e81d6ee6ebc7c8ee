// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const x = d3.scaleBand().domain(data.map(d => d.category)).range([0, innerW]).padding(0.2);
const y = d3.scaleLinear().domain([40, d3.max(data, d => d.value)]).range([innerH, 0]);
g.append("g").attr("transform", `translate(0,${innerH})`).call(d3.axisBottom(x));
g.append("g").call(d3.axisLeft(y));
g.selectAll("rect.bar").data(data).join("rect").attr("class", "bar")
  .attr("x", d => x(d.category)).attr("y", d => y(d.value))
  .attr("width", x.bandwidth()).attr("height", d => innerH - y(d.value))
  .attr("fill", "#4e79a7");

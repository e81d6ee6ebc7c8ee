// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const x = d3.scaleLinear().domain(d3.extent(data, d => d.study_hours)).nice().range([0, innerW]);
const y = d3.scaleLinear().domain([0, 100]).range([innerH, 0]);
g.append("g").attr("transform", `translate(0,${innerH})`).call(d3.axisBottom(x));
g.append("g").call(d3.axisLeft(y));
g.selectAll("circle.point").data(data).join("circle").attr("class", "point")
  .attr("cx", d => x(d.study_hours)).attr("cy", d => y(d.exam_score)).attr("r", 4).attr("fill", "#59a14f");

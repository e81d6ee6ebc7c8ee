// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const x = d3.scaleLinear().domain([0, d3.max(data, d => d.gdp_per_capita)]).nice().range([0, innerW]);
const y = d3.scaleLinear().domain([0, d3.max(data, d => d.life_expectancy)]).nice().range([innerH, 0]);
const r = d3.scaleLinear().domain([0, d3.max(data, d => d.population)]).range([0, 40]);
g.append("g").attr("transform", `translate(0,${innerH})`).call(d3.axisBottom(x));
g.append("g").call(d3.axisLeft(y));
g.selectAll("circle.bubble").data(data).join("circle").attr("class", "bubble")
  .attr("cx", d => x(d.gdp_per_capita)).attr("cy", d => y(d.life_expectancy))
  .attr("r", d => r(d.population)).attr("fill", "#edc948").attr("opacity", 0.7);
g.selectAll("text.country").data(data).join("text").attr("class", "country")
  .attr("x", d => x(d.gdp_per_capita)).attr("y", d => y(d.life_expectancy)).text(d => d.country);

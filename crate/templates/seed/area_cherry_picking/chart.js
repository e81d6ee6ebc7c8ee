// Drawing dialect: executed with `d3` (v7), `csvText`, `container`, `width`, `height` in scope.
const margin = { top: 30, right: 20, bottom: 40, left: 50 };
const innerW = width - margin.left - margin.right;
const innerH = height - margin.top - margin.bottom;
const svg = d3.select(container).append("svg").attr("width", width).attr("height", height);
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);
const data = d3.csvParse(csvText, d3.autoType);
const shown = data.filter(d => d.year >= 2019);
const x = d3.scalePoint().domain(shown.map(d => d.year)).range([0, innerW]);
const y = d3.scaleLinear().domain([0, d3.max(shown, d => d.users)]).nice().range([innerH, 0]);
g.append("g").attr("transform", `translate(0,${innerH})`).call(d3.axisBottom(x));
g.append("g").call(d3.axisLeft(y));
g.append("path").datum(shown).attr("fill", "#76b7b2").attr("opacity", 0.8)
  .attr("d", d3.area().x(d => x(d.year)).y0(innerH).y1(d => y(d.users)));

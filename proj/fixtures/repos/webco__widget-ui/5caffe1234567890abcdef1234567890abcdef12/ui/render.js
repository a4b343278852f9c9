function renderWidget(host, spec) {
  var el = document.getElementById(host);
  el.textContent = spec.title;
  return el;
}

module.exports = renderWidget;

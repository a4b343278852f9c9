function renderWidget(host, spec) {
  var el = document.getElementById(host);
  el.innerHTML = '<div class="widget">' + spec.title + '</div>';
  return el;
}

module.exports = renderWidget;

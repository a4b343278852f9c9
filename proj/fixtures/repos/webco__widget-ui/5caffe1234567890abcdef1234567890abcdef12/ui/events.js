function attachHandlers(el, spec) {
  el.addEventListener('click', function (ev) {
    if (/^https?:/.test(spec.href)) { window.location = spec.href; }
    ev.preventDefault();
  });
}

module.exports = attachHandlers;

function attachHandlers(el, spec) {
  el.addEventListener('click', function (ev) {
    window.location = spec.href;
    ev.preventDefault();
  });
}

module.exports = attachHandlers;

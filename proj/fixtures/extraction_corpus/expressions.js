var handler = function (event) {
  return event.type;
};

var named = function realName(x) {
  return x;
};

app.use(function middleware(req, res) {
  res.end();
});

var table = {
  render: function (rows) {
    return rows.length;
  },
  'quoted key': function (z) { return z; },
};

obj.prop = function () {
  return 7;
};

(function () {
  var iife = 1;
})();

var re = /function xx\(\) \{/g;
var s = "not a function() { here }";
var t = `template ${name} with } brace`;
function actual(f) {
  var inner = `${f('}')} done`;
  return re.test(s) ? inner : t;
}
var mini = function tiny() { return 1; };
if (x) { y = 2; } else { z = 3; }
for (var i = 0; i < 2; i++) { count += i; }
var matcher = /}{/;
var divided = total / count / 2;

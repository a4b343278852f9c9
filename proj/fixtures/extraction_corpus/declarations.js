function outer(a, b) {
  var sum = a + b;
  function inner(c) {
    return c * 2;
  }
  return inner(sum);
}

async function loadAll(paths) {
  return paths;
}

export function visible() {
  return 1;
}

export default function () {
  return 2;
}

function* walker(list) {
  yield list[0];
}

const add = (a, b) => a + b;
const wrap = x => ({ value: x });
const run = async () => {
  await step();
};
items.forEach((item) => {
  console.log(item);
});
const curried = a => b => a + b;
register('click', async event => handle(event));
const picker = {
  pick: (row) => row.id,
};

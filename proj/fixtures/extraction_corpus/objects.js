const api = {
  list() {
    return [];
  },
  async save(data) {
    return data;
  },
  get version() {
    return 3;
  },
  *ids() {
    yield 1;
  },
  nested: {
    deep(v) {
      return v;
    },
  },
};

class Store {
  constructor(backing) {
    this.backing = backing;
  }
  get size() {
    return this.backing.length;
  }
  static of(items) {
    return new Store(items);
  }
  async flush() {
    await this.backing.sync();
  }
  *entries() {
    yield* this.backing;
  }
  #secret() {
    return 42;
  }
  ['computed' + 'Name'](x) {
    return x;
  }
  onTick = () => {
    this.size;
  };
}

class Derived extends Store {
  refresh() {
    return this.flush();
  }
}

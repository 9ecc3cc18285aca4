import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ViewModel } from "../src/viewmodel.js";
import { FakeService } from "./fakeservice.js";

function makeVm() {
  const svc = new FakeService();
  const vm = new ViewModel(new ApiClient("", svc.fetch));
  return { svc, vm };
}

function viewOf(vm: ViewModel) {
  return JSON.parse(
    JSON.stringify({
      samples: vm.samples,
      theory: vm.theory,
      clusters: vm.clusters,
      ranks: vm.ranks,
      metrics: vm.metrics,
    })
  ) as unknown;
}

describe("refreshAll", () => {
  it("fills every panel from the API", async () => {
    const { vm } = makeVm();
    await vm.refreshAll();
    expect(vm.samples!.samples.length).toBe(5);
    expect(vm.theory!.clauses.length).toBeGreaterThan(0);
    expect(vm.clusters!.groups.length).toBeGreaterThan(0);
    expect(vm.metrics!.history.length).toBe(1);
    expect(vm.error).toBeNull();
  });

  it("clear then refresh reproduces the identical view", async () => {
    const { vm } = makeVm();
    await vm.refreshAll();
    const before = viewOf(vm);
    vm.clear();
    expect(vm.theory).toBeNull();
    await vm.refreshAll();
    expect(viewOf(vm)).toEqual(before);
  });

  it("turns a dead server into a banner, not a throw", async () => {
    const vm = new ViewModel(
      new ApiClient("", async () => {
        throw new TypeError("fetch failed");
      })
    );
    await vm.refreshAll();
    expect(vm.error).toBe("fetch failed");
    expect(vm.theory).toBeNull();
  });
});

describe("selectSample", () => {
  it("loads detail and explanation together", async () => {
    const { vm } = makeVm();
    await vm.selectSample("p2");
    expect(vm.selected!.sample_id).toBe("p2");
    expect(vm.explanation!.covered).toBe(true);
  });

  it("keeps the previous selection on 404", async () => {
    const { vm } = makeVm();
    await vm.selectSample("p0");
    await vm.selectSample("missing");
    expect(vm.selected!.sample_id).toBe("p0");
    expect(vm.error).toContain("unknown sample");
  });
});

describe("forbid", () => {
  it("re-induces and refreshes theory, clusters, ranks, metrics", async () => {
    const { vm } = makeVm();
    await vm.refreshAll();
    const ok = await vm.forbid({ forbidden_concepts: [1] });
    expect(ok).toBe(true);
    expect(vm.theory!.constraints.forbidden_concepts).toEqual([1]);
    const bodyIds = vm.theory!.clauses.flatMap((c) =>
      c.body.flatMap((l) => l.args.map(([cid]) => cid))
    );
    expect(bodyIds).not.toContain(1);
    expect(vm.metrics!.history.length).toBe(2);
    expect(vm.metrics!.history[1]!.action).toBe("induce");
    expect(vm.error).toBeNull();
  });

  it("leaves the theory unchanged when forbidding an unused concept", async () => {
    const { vm } = makeVm();
    await vm.refreshAll();
    const clausesBefore = JSON.parse(JSON.stringify(vm.theory!.clauses)) as unknown;
    await vm.forbid({ forbidden_concepts: [9] });
    expect(vm.theory!.clauses).toEqual(clausesBefore);
    expect(vm.metrics!.history.length).toBe(2);
  });

  it("refuses a second mutation while one is pending", async () => {
    const { svc, vm } = makeVm();
    await vm.refreshAll();
    const first = vm.forbid({ forbidden_concepts: [1] });
    const second = await vm.forbid({ forbidden_concepts: [2] });
    expect(second).toBe(false);
    expect(await first).toBe(true);
    expect(svc.inducePosts).toBe(1);
  });

  it("surfaces a 409 as a banner and leaves the view unchanged", async () => {
    const { svc, vm } = makeVm();
    await vm.refreshAll();
    const before = viewOf(vm);
    svc.holdMutations = true;
    const ok = await vm.forbid({ forbidden_concepts: [1] });
    expect(ok).toBe(false);
    expect(vm.error).toBe("another mutation is in progress");
    expect(viewOf(vm)).toEqual(before);
    vm.dismissError();
    expect(vm.error).toBeNull();
  });

  it("surfaces a 400 for malformed constraints without changing state", async () => {
    const { vm } = makeVm();
    await vm.refreshAll();
    const before = viewOf(vm);
    const ok = await vm.forbid({ nonsense: true } as never);
    expect(ok).toBe(false);
    expect(vm.error).toContain("unknown constraint fields");
    expect(viewOf(vm)).toEqual(before);
  });

  it("clears pending even when the request fails", async () => {
    const { svc, vm } = makeVm();
    await vm.refreshAll();
    svc.holdMutations = true;
    await vm.forbid({ forbidden_concepts: [1] });
    expect(vm.pending).toBe(false);
    svc.holdMutations = false;
    expect(await vm.forbid({ forbidden_concepts: [1] })).toBe(true);
  });
});

describe("maskProbe", () => {
  it("records the probe and grows the history", async () => {
    const { vm } = makeVm();
    await vm.refreshAll();
    const ok = await vm.maskProbe({ label: "rule_plus_nonbk" });
    expect(ok).toBe(true);
    expect(vm.lastMask!.f1).toBeLessThan(1);
    expect(vm.lastMask!.mask.masked_concepts).toEqual([1, 3]);
    expect(vm.metrics!.history.at(-1)!.action).toBe("mask:rule_plus_nonbk");
  });

  it("probing outside the rules keeps F1 at 1", async () => {
    const { vm } = makeVm();
    await vm.refreshAll();
    await vm.maskProbe({ label: "nonbk_only" });
    expect(vm.lastMask!.f1).toBe(1);
  });
});

describe("subscriptions", () => {
  it("notifies on every state change and supports unsubscribe", async () => {
    const { vm } = makeVm();
    let seen = 0;
    const off = vm.subscribe(() => seen++);
    await vm.refreshAll();
    expect(seen).toBe(1);
    await vm.forbid({ forbidden_concepts: [9] });
    expect(seen).toBe(3);
    off();
    vm.dismissError();
    expect(seen).toBe(3);
  });
});

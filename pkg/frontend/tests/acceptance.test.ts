// @vitest-environment jsdom
/**
 * End-to-end checks against the fake service, driven through the rendered
 * app: a constraint submitted via the form removes the concept from the
 * refreshed theory (cross-checked against a direct GET /theory), and the
 * heat-grid tooltips shown for a sample equal the API payload values.
 */
import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, TheoryPayload, SampleDetail, theoryConceptIds } from "../src/api.js";
import { App } from "../src/app.js";
import { FakeService } from "./fakeservice.js";

function mountApp(svc: FakeService): App {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app")!;
  return new App(document, root, new ApiClient("", svc.fetch));
}

function conceptIdsInDom(): string[] {
  return [...document.querySelectorAll(".theory-panel .clause-text")].map(
    (el) => el.textContent ?? ""
  );
}

describe("constraint round-trip through the UI", () => {
  let svc: FakeService;
  let app: App;

  beforeEach(async () => {
    svc = new FakeService();
    app = mountApp(svc);
    await app.start();
  });

  it("forbidding a theory concept removes it from the refreshed theory", async () => {
    const before = app.vm.theory!;
    const target = theoryConceptIds(before)[0]!;
    expect(target).toBe(1);

    const select = document.querySelector(".forbid-concept") as HTMLSelectElement;
    select.value = String(target);
    (document.querySelector(".forbid-submit") as HTMLButtonElement).click();

    await vi.waitFor(() => {
      expect(app.vm.pending).toBe(false);
      expect(app.vm.theory!.constraints.forbidden_concepts).toContain(target);
    });

    // the view model's theory is exactly what a direct GET /theory returns
    const direct = (await (await svc.fetch("/theory")).json()) as TheoryPayload;
    expect(app.vm.theory).toEqual(direct);
    expect(theoryConceptIds(direct)).not.toContain(target);

    // and the rendered clause texts no longer mention the concept
    const texts = conceptIdsInDom();
    expect(texts.length).toBeGreaterThan(0);
    for (const text of texts) expect(text).not.toContain(`c${target}`);

    // panels refreshed: history grew, clusters re-keyed to the new clauses
    expect(app.vm.metrics!.history.map((h) => h.action)).toEqual(["init", "induce"]);
    const indices = app.vm.clusters!.groups.flatMap((g) => g.clause_indices);
    expect(direct.clauses.length).toBeGreaterThan(before.clauses.length);
    expect(indices).toContain(direct.clauses.length - 1);
    for (const idx of indices) expect(idx).toBeLessThan(direct.clauses.length);
  });

  it("a rejected mutation leaves the rendered theory untouched", async () => {
    const before = JSON.stringify(app.vm.theory);
    svc.holdMutations = true;
    (document.querySelector(".forbid-submit") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(app.vm.error).not.toBeNull();
    });
    expect(JSON.stringify(app.vm.theory)).toBe(before);
    const banner = document.querySelector(".error-banner") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("another mutation is in progress");
  });
});

describe("heat-grid display fidelity", () => {
  it("tooltips equal the API payload values on 10 sampled cells", async () => {
    const svc = new FakeService();
    const app = mountApp(svc);
    await app.start();

    const links = [...document.querySelectorAll(".sample-link")] as HTMLButtonElement[];
    links[0]!.click();
    await vi.waitFor(() => {
      expect(app.vm.selected?.sample_id).toBe("p0");
    });

    const payload = (await (await svc.fetch("/samples/p0")).json()) as SampleDetail;
    const grid = payload.concepts[0]!.grid;
    const shown = document.querySelector(".detail-panel .heat-grid")!;
    const cells = shown.querySelectorAll(".heat-cell");
    expect(cells.length).toBe(payload.height * payload.width);

    for (let k = 0; k < 10; k++) {
      const flat = (k * 13 + 5) % (payload.height * payload.width);
      const i = Math.floor(flat / payload.width);
      const j = flat % payload.width;
      const title = (cells[flat] as HTMLElement).title;
      expect(title).toBe(String(grid[i]![j]!));
      expect(Number(title)).toBe(grid[i]![j]!);
    }
  });
});

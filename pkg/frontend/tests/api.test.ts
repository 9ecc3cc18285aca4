import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, theoryConceptIds } from "../src/api.js";
import { FakeService } from "./fakeservice.js";

function recordingClient(status = 200, body: unknown = {}) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const client = new ApiClient("http://svc", async (url, init) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  });
  return { client, calls };
}

describe("request building", () => {
  it("prefixes the base url", async () => {
    const { client, calls } = recordingClient();
    await client.getTheory();
    expect(calls[0]!.url).toBe("http://svc/theory");
  });

  it("escapes sample ids in paths", async () => {
    const { client, calls } = recordingClient();
    await client.getSample("odd/id");
    expect(calls[0]!.url).toBe("http://svc/samples/odd%2Fid");
  });

  it("omits top_rules unless given", async () => {
    const { client, calls } = recordingClient();
    await client.getRanks();
    await client.getRanks(5);
    expect(calls[0]!.url).toBe("http://svc/ranks");
    expect(calls[1]!.url).toBe("http://svc/ranks?top_rules=5");
  });

  it("posts induce constraints as a JSON object", async () => {
    const { client, calls } = recordingClient();
    await client.induce({ forbidden_concepts: [2], forbidden_relations: ["close_to"] });
    const init = calls[0]!.init!;
    expect(init.method).toBe("POST");
    expect((init.headers as Record<string, string>)["content-type"]).toBe("application/json");
    expect(JSON.parse(init.body as string)).toEqual({
      forbidden_concepts: [2],
      forbidden_relations: ["close_to"],
    });
  });

  it("posts mask specs", async () => {
    const { client, calls } = recordingClient();
    await client.mask({ label: "custom", concepts: [1, 3] });
    expect(calls[0]!.url).toBe("http://svc/mask");
    expect(JSON.parse(calls[0]!.init!.body as string)).toEqual({
      label: "custom",
      concepts: [1, 3],
    });
  });
});

describe("error mapping", () => {
  it("raises ApiError with the server detail", async () => {
    const { client } = recordingClient(404, { detail: "unknown sample 'x'" });
    const err = await client.getSample("x").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).detail).toBe("unknown sample 'x'");
  });

  it("falls back to status text for non-JSON bodies", async () => {
    const client = new ApiClient(
      "",
      async () => new Response("<html>boom</html>", { status: 502, statusText: "Bad Gateway" })
    );
    const err = await client.getTheory().catch((e: unknown) => e);
    expect((err as ApiError).detail).toBe("Bad Gateway");
  });

  it("propagates network failures untouched", async () => {
    const client = new ApiClient("", async () => {
      throw new TypeError("fetch failed");
    });
    await expect(client.getMetrics()).rejects.toThrow("fetch failed");
  });
});

describe("against the fake service", () => {
  it("round-trips every GET endpoint", async () => {
    const svc = new FakeService();
    const client = new ApiClient("", svc.fetch);
    const samples = await client.listSamples();
    expect(samples.samples.map((s) => s.sample_id)).toEqual(["p0", "p1", "p2", "n0", "n1"]);

    const detail = await client.getSample("p0");
    expect(detail.height).toBe(8);
    expect(detail.concepts.map((c) => c.concept_id)).toEqual([1, 2, 3]);
    expect(detail.regions[0]!.boundary.length).toBe(4);

    const theory = await client.getTheory();
    expect(theory.clauses.length).toBeGreaterThan(0);
    expect(theory.clauses[0]!.text).toContain(":-");

    const clusters = await client.getClusters();
    const clustered = clusters.groups.flatMap((g) => g.samples).sort();
    expect(clustered).toEqual(["n0", "n1", "p0", "p1", "p2"]);

    const ranks = await client.getRanks(1);
    expect(ranks.top_rules).toBe(1);
    expect(Object.keys(ranks.histograms).length).toBeGreaterThan(0);

    const metrics = await client.getMetrics();
    expect(metrics.history[0]!.action).toBe("init");
    expect(metrics.fidelity).toBe(1);

    const explanation = await client.getExplanation("n0");
    expect(explanation.covered).toBe(false);
    expect(explanation.failing_literals.length).toBeGreaterThan(0);
  });

  it("maps fake 404s", async () => {
    const client = new ApiClient("", new FakeService().fetch);
    await expect(client.getSample("zz")).rejects.toMatchObject({ status: 404 });
  });
});

describe("theoryConceptIds", () => {
  it("collects sorted unique ids from clause bodies", async () => {
    const client = new ApiClient("", new FakeService().fetch);
    const theory = await client.getTheory();
    expect(theoryConceptIds(theory)).toEqual([1, 3]);
  });
});

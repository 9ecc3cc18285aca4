/**
 * Single-page explorer over the corex service.
 *
 * Panels render straight from the ViewModel's stored payloads on every
 * change notification; there is no retained DOM state beyond the input
 * fields. The constraint form posts /induce through the view model, which
 * enforces one in-flight mutation; all mutating buttons share the same
 * disabled state while a request is pending.
 */

import { ApiClient, ClausePayload, theoryConceptIds } from "./api.js";
import { renderHeatGrid, renderRegionOverlay } from "./heatgrid.js";
import { ViewModel } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function clauseRow(doc: Document, clause: ClausePayload): HTMLElement {
  const row = el(doc, "div", "clause");
  row.appendChild(el(doc, "code", "clause-text", clause.text));
  row.appendChild(el(doc, "p", "clause-verbal", clause.verbalized));
  row.appendChild(
    el(
      doc,
      "span",
      "clause-coverage",
      `covers ${clause.covered_pos.length} pos / ${clause.covered_neg.length} neg`
    )
  );
  return row;
}

export class App {
  readonly vm: ViewModel;
  private readonly doc: Document;
  private readonly root: HTMLElement;

  constructor(doc: Document, root: HTMLElement, api: ApiClient) {
    this.doc = doc;
    this.root = root;
    this.vm = new ViewModel(api);
    this.vm.subscribe(() => this.render());
  }

  async start(): Promise<void> {
    await this.vm.refreshAll();
  }

  private render(): void {
    const doc = this.doc;
    this.root.textContent = "";
    this.root.appendChild(this.renderBanner());
    const main = el(doc, "main", "panels");
    main.appendChild(this.renderMetrics());
    main.appendChild(this.renderTheory());
    main.appendChild(this.renderConstraintForm());
    main.appendChild(this.renderClusters());
    main.appendChild(this.renderRanks());
    main.appendChild(this.renderSamples());
    main.appendChild(this.renderSampleDetail());
    this.root.appendChild(main);
  }

  private renderBanner(): HTMLElement {
    const banner = el(this.doc, "div", "error-banner");
    if (!this.vm.error) {
      banner.hidden = true;
      return banner;
    }
    banner.appendChild(el(this.doc, "span", "error-text", this.vm.error));
    const dismiss = el(this.doc, "button", "dismiss", "dismiss");
    dismiss.addEventListener("click", () => this.vm.dismissError());
    banner.appendChild(dismiss);
    return banner;
  }

  private renderMetrics(): HTMLElement {
    const panel = el(this.doc, "section", "metrics-panel");
    panel.appendChild(el(this.doc, "h2", undefined, "metrics"));
    const m = this.vm.metrics;
    if (!m) return panel;
    panel.appendChild(
      el(
        this.doc,
        "p",
        "metrics-now",
        `class ${m.class_name}: fidelity ${m.fidelity.toFixed(4)}, ` +
          `F1 ${m.f1.toFixed(4)}, ${m.n_clauses} clauses over ${m.n_samples} samples`
      )
    );
    const history = el(this.doc, "ol", "history");
    for (const h of m.history)
      history.appendChild(
        el(
          this.doc,
          "li",
          "history-entry",
          `#${h.seq} ${h.action}: fidelity ${h.fidelity.toFixed(4)}, F1 ${h.f1.toFixed(4)}`
        )
      );
    panel.appendChild(history);
    if (this.vm.lastMask) {
      const mk = this.vm.lastMask;
      panel.appendChild(
        el(
          this.doc,
          "p",
          "mask-result",
          `mask ${mk.mask.label} [${mk.mask.masked_concepts.join(", ")}]: ` +
            `fidelity ${mk.fidelity.toFixed(4)}, F1 ${mk.f1.toFixed(4)}`
        )
      );
    }
    return panel;
  }

  private renderTheory(): HTMLElement {
    const panel = el(this.doc, "section", "theory-panel");
    panel.appendChild(el(this.doc, "h2", undefined, "theory"));
    const t = this.vm.theory;
    if (!t) return panel;
    for (const clause of t.clauses) panel.appendChild(clauseRow(this.doc, clause));
    if (t.uncovered_pos.length)
      panel.appendChild(
        el(this.doc, "p", "uncovered", `uncovered positives: ${t.uncovered_pos.join(", ")}`)
      );
    const cons = t.constraints;
    if (cons.forbidden_concepts.length || cons.forbidden_relations.length)
      panel.appendChild(
        el(
          this.doc,
          "p",
          "active-constraints",
          `forbidden: concepts [${cons.forbidden_concepts.join(", ")}], ` +
            `relations [${cons.forbidden_relations.join(", ")}]`
        )
      );
    return panel;
  }

  private renderConstraintForm(): HTMLElement {
    const doc = this.doc;
    const panel = el(doc, "section", "constraint-panel");
    panel.appendChild(el(doc, "h2", undefined, "forbid and re-induce"));

    const select = el(doc, "select", "forbid-concept") as HTMLSelectElement;
    for (const cid of this.vm.theory ? theoryConceptIds(this.vm.theory) : []) {
      const opt = el(doc, "option", undefined, `concept ${cid}`) as HTMLOptionElement;
      opt.value = String(cid);
      select.appendChild(opt);
    }
    const relation = el(doc, "input", "forbid-relation") as HTMLInputElement;
    relation.placeholder = "relation name (optional)";

    const submit = el(doc, "button", "forbid-submit", "forbid") as HTMLButtonElement;
    submit.disabled = this.vm.pending || !this.vm.theory;
    submit.addEventListener("click", () => {
      const concepts = select.value ? [Number(select.value)] : [];
      const relations = relation.value.trim() ? [relation.value.trim()] : [];
      void this.vm.forbid({
        forbidden_concepts: concepts,
        forbidden_relations: relations,
      });
    });

    panel.appendChild(select);
    panel.appendChild(relation);
    panel.appendChild(submit);

    const maskRule = el(doc, "button", "mask-rule", "mask rule concepts") as HTMLButtonElement;
    maskRule.disabled = this.vm.pending;
    maskRule.addEventListener("click", () => {
      void this.vm.maskProbe({ label: "rule_plus_nonbk" });
    });
    panel.appendChild(maskRule);
    return panel;
  }

  private renderClusters(): HTMLElement {
    const panel = el(this.doc, "section", "clusters-panel");
    panel.appendChild(el(this.doc, "h2", undefined, "clusters"));
    const c = this.vm.clusters;
    if (!c) return panel;
    const table = el(this.doc, "table", "cluster-table");
    for (const g of c.groups) {
      const row = el(this.doc, "tr", "cluster-row");
      row.appendChild(el(this.doc, "td", undefined, g.clause_indices.join("|")));
      row.appendChild(el(this.doc, "td", undefined, String(g.count)));
      row.appendChild(el(this.doc, "td", undefined, g.samples.slice(0, 8).join(", ")));
      table.appendChild(row);
    }
    panel.appendChild(table);
    return panel;
  }

  private renderRanks(): HTMLElement {
    const panel = el(this.doc, "section", "ranks-panel");
    panel.appendChild(el(this.doc, "h2", undefined, "rule concept ranks"));
    const r = this.vm.ranks;
    if (!r) return panel;
    for (const [cid, pairs] of Object.entries(r.histograms)) {
      const line = pairs.map(([rank, count]) => `rank ${rank}: ${count}`).join(", ");
      panel.appendChild(el(this.doc, "p", "rank-row", `concept ${cid}: ${line}`));
    }
    return panel;
  }

  private renderSamples(): HTMLElement {
    const panel = el(this.doc, "section", "samples-panel");
    panel.appendChild(el(this.doc, "h2", undefined, "samples"));
    const s = this.vm.samples;
    if (!s) return panel;
    const list = el(this.doc, "ul", "sample-list");
    for (const sample of s.samples) {
      const item = el(this.doc, "li", "sample-item");
      const link = el(
        this.doc,
        "button",
        "sample-link",
        `${sample.sample_id} model=${sample.model_truth} explainer=${sample.explainer_truth}`
      );
      link.addEventListener("click", () => void this.vm.selectSample(sample.sample_id));
      item.appendChild(link);
      list.appendChild(item);
    }
    panel.appendChild(list);
    return panel;
  }

  private renderSampleDetail(): HTMLElement {
    const doc = this.doc;
    const panel = el(doc, "section", "detail-panel");
    panel.appendChild(el(doc, "h2", undefined, "sample"));
    const d = this.vm.selected;
    if (!d) return panel;
    panel.appendChild(
      el(
        doc,
        "p",
        "detail-head",
        `${d.sample_id}: ground=${d.ground_truth} model=${d.model_truth} ` +
          `explainer=${d.explainer_truth}`
      )
    );
    for (const concept of d.concepts) {
      const box = el(doc, "div", "concept-box");
      const name = concept.label ? `${concept.label} (c${concept.concept_id})` : `c${concept.concept_id}`;
      box.appendChild(
        el(
          doc,
          "h3",
          undefined,
          `${name} ${concept.sign} ${concept.total_relevance.toFixed(3)}` +
            (concept.kept ? "" : " (filtered)")
        )
      );
      const stage = el(doc, "div", "grid-stage");
      stage.appendChild(renderHeatGrid(doc, concept.grid));
      for (const region of d.regions)
        if (region.concept_id === concept.concept_id)
          stage.appendChild(renderRegionOverlay(doc, region.boundary, d.width, d.height));
      box.appendChild(stage);
      panel.appendChild(box);
    }
    if (this.vm.explanation) {
      const ex = this.vm.explanation;
      panel.appendChild(
        el(
          doc,
          "p",
          "explanation",
          ex.covered ? `covered by clause ${ex.clause_index}` : ex.verbalization
        )
      );
    }
    const facts = el(doc, "ul", "fact-list");
    for (const fact of d.facts) facts.appendChild(el(doc, "li", "fact", fact));
    panel.appendChild(facts);
    return panel;
  }
}

export function mount(doc: Document, rootId = "app", baseUrl = ""): App {
  const root = doc.getElementById(rootId);
  if (!root) throw new Error(`no #${rootId} element to mount on`);
  const app = new App(doc, root, new ApiClient(baseUrl));
  void app.start();
  return app;
}

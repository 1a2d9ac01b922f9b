import type { Subgraph } from "./types.js";

export interface GraphViewHandlers {
  onRecenter?: (entityId: string) => void;
  onDepthChange?: (depth: 1 | 2) => void;
}

interface LayoutNode {
  id: string;
  label: string;
  x: number;
  y: number;
}

const WIDTH = 560;
const HEIGHT = 380;
const SVG_NS = "http://www.w3.org/2000/svg";

/**
 * Deterministic force layout: nodes start on a circle in sorted-id order
 * and relax under spring/repulsion for a fixed number of iterations, so
 * the same subgraph always lays out the same way.
 */
export function layoutNodes(subgraph: Subgraph, iterations = 120): LayoutNode[] {
  const ids = subgraph.entities.map((e) => e.entity_id).sort();
  const index = new Map(ids.map((id, i) => [id, i]));
  const labels = new Map(subgraph.entities.map((e) => [e.entity_id, e.canonical_name]));
  const n = ids.length;
  if (n === 0) return [];
  const xs = new Float64Array(n);
  const ys = new Float64Array(n);
  const radius = Math.min(WIDTH, HEIGHT) / 2 - 60;
  for (let i = 0; i < n; i++) {
    const angle = (2 * Math.PI * i) / n;
    xs[i] = Math.cos(angle) * radius;
    ys[i] = Math.sin(angle) * radius;
  }
  const edges = subgraph.relations
    .map((r) => [index.get(r.subject_id), index.get(r.object_id)])
    .filter((pair): pair is [number, number] => pair[0] !== undefined && pair[1] !== undefined);

  const springLength = 140;
  for (let step = 0; step < iterations; step++) {
    const fx = new Float64Array(n);
    const fy = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let dx = xs[i]! - xs[j]!;
        let dy = ys[i]! - ys[j]!;
        const d2 = dx * dx + dy * dy || 1;
        const push = 2600 / d2;
        const d = Math.sqrt(d2);
        dx /= d;
        dy /= d;
        fx[i]! += dx * push;
        fy[i]! += dy * push;
        fx[j]! -= dx * push;
        fy[j]! -= dy * push;
      }
    }
    for (const [a, b] of edges) {
      const dx = xs[b]! - xs[a]!;
      const dy = ys[b]! - ys[a]!;
      const d = Math.sqrt(dx * dx + dy * dy) || 1;
      const pull = 0.02 * (d - springLength);
      fx[a]! += (dx / d) * pull * d;
      fy[a]! += (dy / d) * pull * d;
      fx[b]! -= (dx / d) * pull * d;
      fy[b]! -= (dy / d) * pull * d;
    }
    const cooling = 1 - step / iterations;
    for (let i = 0; i < n; i++) {
      xs[i]! += Math.max(-12, Math.min(12, fx[i]!)) * cooling;
      ys[i]! += Math.max(-12, Math.min(12, fy[i]!)) * cooling;
      xs[i]! -= xs[i]! * 0.01; // gentle centering
      ys[i]! -= ys[i]! * 0.01;
    }
  }
  return ids.map((id, i) => ({
    id,
    label: labels.get(id) ?? id,
    x: xs[i]! + WIDTH / 2,
    y: ys[i]! + HEIGHT / 2,
  }));
}

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS(SVG_NS, tag);
}

/**
 * Render the entity/relation slice as an SVG graph with a depth toggle.
 * Node and edge sets are exactly the payload's; clicking a node
 * re-centers the view on that entity.
 */
export function renderSubgraph(
  subgraph: Subgraph,
  handlers: GraphViewHandlers = {},
): HTMLElement {
  const wrap = document.createElement("section");
  wrap.className = "graph-view";

  const toolbar = document.createElement("div");
  toolbar.className = "graph-toolbar";
  const currentDepth = subgraph.depth === 2 ? 2 : 1;
  for (const depth of [1, 2] as const) {
    const button = document.createElement("button");
    button.className = "depth-toggle" + (depth === currentDepth ? " active" : "");
    button.dataset.depth = String(depth);
    button.textContent = `depth ${depth}`;
    button.addEventListener("click", () => handlers.onDepthChange?.(depth));
    toolbar.append(button);
  }
  if (subgraph.center) {
    const center = document.createElement("span");
    center.className = "graph-center";
    center.textContent = `center: ${subgraph.center}`;
    toolbar.append(center);
  }
  wrap.append(toolbar);

  if (subgraph.relations.length === 0) {
    const empty = document.createElement("p");
    empty.className = "graph-empty";
    empty.textContent = "no relations found";
    wrap.append(empty);
    if (subgraph.entities.length === 0) return wrap;
  }

  const nodes = layoutNodes(subgraph);
  const at = new Map(nodes.map((node) => [node.id, node]));
  const svg = svgEl("svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "graph-svg");

  for (const rel of subgraph.relations) {
    const a = at.get(rel.subject_id);
    const b = at.get(rel.object_id);
    if (!a || !b) continue;
    const group = svgEl("g");
    group.setAttribute("class", "graph-edge");
    group.setAttribute("data-subject", rel.subject_id);
    group.setAttribute("data-object", rel.object_id);
    group.setAttribute("data-predicate", rel.predicate);
    const line = svgEl("line");
    line.setAttribute("x1", a.x.toFixed(1));
    line.setAttribute("y1", a.y.toFixed(1));
    line.setAttribute("x2", b.x.toFixed(1));
    line.setAttribute("y2", b.y.toFixed(1));
    const label = svgEl("text");
    label.setAttribute("x", ((a.x + b.x) / 2).toFixed(1));
    label.setAttribute("y", ((a.y + b.y) / 2 - 4).toFixed(1));
    label.setAttribute("class", "edge-label");
    label.textContent = rel.predicate;
    group.append(line, label);
    svg.append(group);
  }

  for (const node of nodes) {
    const group = svgEl("g");
    group.setAttribute("class", "graph-node");
    group.setAttribute("data-entity-id", node.id);
    const circle = svgEl("circle");
    circle.setAttribute("cx", node.x.toFixed(1));
    circle.setAttribute("cy", node.y.toFixed(1));
    circle.setAttribute("r", node.id === subgraph.center ? "14" : "10");
    const label = svgEl("text");
    label.setAttribute("x", node.x.toFixed(1));
    label.setAttribute("y", (node.y - 16).toFixed(1));
    label.setAttribute("class", "node-label");
    label.textContent = node.label;
    group.append(circle, label);
    group.addEventListener("click", () => handlers.onRecenter?.(node.id));
    svg.append(group);
  }
  wrap.append(svg);
  return wrap;
}

export function shownNodeIds(view: HTMLElement): string[] {
  return [...view.querySelectorAll<SVGGElement>(".graph-node")].map(
    (g) => g.getAttribute("data-entity-id") ?? "",
  );
}

export function shownEdges(view: HTMLElement): Array<[string, string, string]> {
  return [...view.querySelectorAll<SVGGElement>(".graph-edge")].map((g) => [
    g.getAttribute("data-subject") ?? "",
    g.getAttribute("data-predicate") ?? "",
    g.getAttribute("data-object") ?? "",
  ]);
}

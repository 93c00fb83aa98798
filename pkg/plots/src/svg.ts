/** Deterministic SVG string assembly: fixed number formatting, no runtime state. */

/** Fixed-precision coordinate formatting so identical inputs yield identical bytes. */
export function fmt(value: number): string {
  if (!Number.isFinite(value)) throw new Error(`non-finite coordinate: ${value}`);
  const s = value.toFixed(3);
  return s === "-0.000" ? "0.000" : s;
}

export interface SvgAttrs {
  readonly [key: string]: string;
}

function attrString(attrs: SvgAttrs): string {
  const keys = Object.keys(attrs).sort();
  return keys.map((k) => ` ${k}="${attrs[k]}"`).join("");
}

export function tag(name: string, attrs: SvgAttrs, body?: string): string {
  const head = `<${name}${attrString(attrs)}`;
  if (body === undefined) return `${head}/>`;
  return `${head}>${body}</${name}>`;
}

export function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class SvgBuilder {
  private readonly parts: string[] = [];
  readonly width: number;
  readonly height: number;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  rect(x: number, y: number, w: number, h: number, attrs: SvgAttrs): void {
    this.add(
      tag("rect", { ...attrs, height: fmt(h), width: fmt(w), x: fmt(x), y: fmt(y) }),
    );
  }

  circle(cx: number, cy: number, r: number, attrs: SvgAttrs): void {
    this.add(tag("circle", { ...attrs, cx: fmt(cx), cy: fmt(cy), r: fmt(r) }));
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs: SvgAttrs): void {
    this.add(
      tag("line", { ...attrs, x1: fmt(x1), x2: fmt(x2), y1: fmt(y1), y2: fmt(y2) }),
    );
  }

  polyline(points: readonly (readonly [number, number])[], attrs: SvgAttrs): void {
    const joined = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.add(tag("polyline", { ...attrs, fill: attrs.fill ?? "none", points: joined }));
  }

  path(d: string, attrs: SvgAttrs): void {
    this.add(tag("path", { ...attrs, d }));
  }

  text(x: number, y: number, content: string, attrs: SvgAttrs): void {
    this.add(tag("text", { ...attrs, x: fmt(x), y: fmt(y) }, escapeText(content)));
  }

  render(): string {
    const open = tag(
      "svg",
      {
        height: fmt(this.height),
        viewBox: `0 0 ${fmt(this.width)} ${fmt(this.height)}`,
        width: fmt(this.width),
        xmlns: "http://www.w3.org/2000/svg",
      },
      this.parts.join(""),
    );
    return `${open}\n`;
  }
}

/** Map a unit-interval value to a fixed blue-to-red diverging ramp (hex string). */
export function heatColor(unit: number): string {
  const t = Math.min(1, Math.max(0, unit));
  const stops: readonly (readonly [number, number, number])[] = [
    [33, 50, 120],
    [90, 140, 200],
    [235, 235, 235],
    [230, 140, 90],
    [170, 40, 40],
  ];
  const scaled = t * (stops.length - 1);
  const lo = Math.min(stops.length - 2, Math.floor(scaled));
  const frac = scaled - lo;
  const mix = (a: number, b: number): number => Math.round(a + (b - a) * frac);
  const [r, g, b] = [0, 1, 2].map((c) => mix(stops[lo][c], stops[lo + 1][c]));
  const hex = (v: number): string => v.toString(16).padStart(2, "0");
  return `#${hex(r)}${hex(g)}${hex(b)}`;
}

export function esc(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function shortId(hex: string): string {
  return hex.length > 16 ? hex.slice(0, 16) : hex;
}

/** Prices are integers in minor units (centavos). */
export function money(minor: number): string {
  return (minor / 100).toFixed(2);
}

export function statusBadge(status: string): string {
  return `<span class="badge badge-${esc(status.toLowerCase())}">${esc(status)}</span>`;
}

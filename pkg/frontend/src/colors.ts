/** Deterministic per-category colors: hash the name onto a fixed palette
 * so the same category always renders the same hue. */

const PALETTE = [
  '#ffd54f', // amber
  '#81d4fa', // light blue
  '#a5d6a7', // green
  '#f48fb1', // pink
  '#ce93d8', // purple
  '#ffab91', // deep orange
  '#80cbc4', // teal
  '#e6ee9c', // lime
];

export function categoryColor(category: string): string {
  let hash = 0;
  for (let i = 0; i < category.length; i += 1) {
    hash = (hash * 31 + category.charCodeAt(i)) >>> 0;
  }
  return PALETTE[hash % PALETTE.length];
}

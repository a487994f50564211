// Presentation helpers.
//
// The service speaks ASCII connectives (!, &, |, ->, <->). Atom names are
// strictly word characters, so blind token replacement cannot collide with
// an identifier. Order matters: <-> must go before ->.

const CONNECTIVES: Array<[RegExp, string]> = [
  [/<->/g, "↔"], // <->  becomes  the biconditional arrow
  [/->/g, "→"], // ->   becomes  the implication arrow
  [/\|/g, "∨"], // |    becomes  logical or
  [/&/g, "∧"], // &    becomes  logical and
  [/!/g, "¬"], // !    becomes  negation
];

/** Render a formula string with the usual logical symbols. */
export function toSymbols(ascii: string): string {
  let out = ascii;
  for (const [pattern, symbol] of CONNECTIVES) {
    out = out.replace(pattern, symbol);
  }
  return out;
}

/** {1, 2, 5} style rendering of a formula-id set. */
export function idSetText(ids: number[]): string {
  return `{${ids.join(", ")}}`;
}

export function probText(p: number): string {
  return `${(100 * p).toFixed(1)}%`;
}

/** Milliseconds for the history table; phases that did not run show 0. */
export function msText(ms: number): string {
  if (ms === 0) return "0";
  if (ms < 0.005) return "<0.01";
  return ms.toFixed(2);
}

export function measureValueText(value: number): string {
  return value.toFixed(4);
}

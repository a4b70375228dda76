/** Display formatting. Numbers reaching the screen must be byte-identical to
 * the API's JSON serialization, so the exact form is the number's shortest
 * round-trip decimal, which is what both JSON.parse/String and the server's
 * writer produce. */

export function exact(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) {
    return "n/a";
  }
  return String(value);
}

/** Human grouping display: "{A1, A2}  {B1}". */
export function formatGroups(groups: string[][]): string {
  return groups.map((g) => `{${g.join(", ")}}`).join("  ");
}

import { readFileSync } from "node:fs";

export function fixtureText(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf-8");
}

export function loadFixture<T>(name: string): T {
  return JSON.parse(fixtureText(name)) as T;
}

// Loader for the frozen server/CLI payloads the UI tests replay.
// tests/test_ui_fixtures.py on the Python side regenerates the file and
// fails when it drifts from the live pipeline.

import { readFileSync } from "node:fs";
import type { GeolocateBody } from "../src/api.js";

export interface ClickFixture {
  body: Required<GeolocateBody>;
  response_text: string;
}

export interface UiFixture {
  session_text: string;
  cli_report_text: string;
  clicks: ClickFixture[];
  sky_click: {
    body: GeolocateBody;
    status: number;
    response_text: string;
  };
}

export function loadFixture(): UiFixture {
  const url = new URL("./fixtures/ui_fixture.json", import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8"));
}

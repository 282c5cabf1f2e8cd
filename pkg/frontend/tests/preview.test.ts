import { describe, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import { ConsoleApp } from "../src/app.js";
import { defaultForm } from "../src/validate.js";
import { MockServer, previewCells } from "./mock_server.js";

function fakeWindow() {
  return {
    location: { hash: "" } as Location,
    addEventListener: () => {},
  };
}

function makeApp(server: MockServer) {
  const root = document.createElement("main");
  document.body.append(root);
  const api = new ApiClient(server.fetch);
  return new ConsoleApp(api, root, fakeWindow());
}

describe("preview grid", () => {
  test("a matching query renders 12 thumbnails", async () => {
    const server = new MockServer();
    server.instantPreview = previewCells(12);
    const app = makeApp(server);
    await app.runPreview({ ...defaultForm(), query: "city", scale: 50 });

    const cells = app.preview.element.querySelectorAll(".cell");
    expect(cells.length).toBe(12);
    const images = app.preview.element.querySelectorAll("img");
    expect(images.length).toBe(12);
    expect(images[0].getAttribute("src")).toContain("preview.png");
    // metadata per cell: duration, motion category, tags
    const caption = cells[0].querySelector("figcaption")!.textContent!;
    expect(caption).toMatch(/\d+\.\ds · motion (low|medium|high)/);
    expect(caption).toContain("city");
  });

  test("the dry-run submission is capped at 12 clips", async () => {
    const server = new MockServer();
    server.instantPreview = previewCells(50);
    const app = makeApp(server);
    await app.runPreview({ ...defaultForm(), query: "city", scale: 50 });
    expect(app.preview.element.querySelectorAll(".cell").length).toBe(12);
  });

  test("no matches shows the empty state, not a spinner", async () => {
    const server = new MockServer();
    server.instantPreview = [];
    const app = makeApp(server);
    await app.runPreview({ ...defaultForm(), query: "zz nothing", scale: 8 });
    expect(app.preview.element.textContent).toContain("No matches");
    expect(app.preview.element.querySelector(".loading")).toBeNull();
  });

  test("a 422 from the API lands as an inline field error", async () => {
    const server = new MockServer();
    const app = makeApp(server);
    const form = { ...defaultForm(), query: "city" };
    form.retrieval_ratio = 1.5; // bypasses the slider, server rejects
    await app.runPreview(form);
    const error = app.form.element.querySelector(
      '[data-for="retrieval_ratio"]') as HTMLElement;
    expect(error.textContent).toContain("must be <= 1");
  });
});

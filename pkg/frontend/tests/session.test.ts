import { describe, expect, it } from "vitest";

import { ReviewSession } from "../src/session.js";

describe("ReviewSession", () => {
  it("starts with the failing filter and no selection", () => {
    const session = new ReviewSession();
    expect(session.filter.status).toBe("failing");
    expect(session.currentTestId).toBeNull();
    expect(session.hasUnsavedEdits).toBe(false);
  });

  it("walks the queue with next/previous", () => {
    const session = new ReviewSession();
    session.setQueue(["a", "b", "c"]);
    expect(session.next()).toEqual({ moved: true, blockedByEdits: false });
    expect(session.currentTestId).toBe("a");
    session.next();
    expect(session.currentTestId).toBe("b");
    session.previous();
    expect(session.currentTestId).toBe("a");
    expect(session.previous()).toEqual({ moved: false, blockedByEdits: false });
  });

  it("blocks navigation while edits are unsaved", () => {
    const session = new ReviewSession();
    session.setQueue(["a", "b"]);
    session.next();
    session.markDirty();
    expect(session.next()).toEqual({ moved: false, blockedByEdits: true });
    expect(session.goTo("b")).toEqual({ moved: false, blockedByEdits: true });
    expect(session.currentTestId).toBe("a");
  });

  it("unblocks after an explicit discard", () => {
    const session = new ReviewSession();
    session.setQueue(["a", "b"]);
    session.next();
    session.markDirty();
    session.discardEdits();
    expect(session.next()).toEqual({ moved: true, blockedByEdits: false });
    expect(session.currentTestId).toBe("b");
  });

  it("staying put is never blocked", () => {
    const session = new ReviewSession();
    session.setQueue(["a"]);
    session.goTo("a");
    session.markDirty();
    expect(session.goTo("a")).toEqual({ moved: false, blockedByEdits: false });
  });

  it("keeps the open test selected across queue refreshes", () => {
    const session = new ReviewSession();
    session.setQueue(["a", "b", "c"]);
    session.goTo("b");
    session.setQueue(["c", "b"]);
    expect(session.currentTestId).toBe("b");
    session.setQueue(["c"]);
    expect(session.currentTestId).toBeNull();
  });
});

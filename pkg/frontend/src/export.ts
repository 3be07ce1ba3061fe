/** File export helpers. */
import type { Session } from "./session.js";
import { toJsonLines } from "./schema.js";

export function sessionToJsonLines(session: Session, includePractice = false): string {
  return toJsonLines(session.exportRows(includePractice));
}

/** Trigger a browser download of the session export. */
export function downloadSession(session: Session, filename = "trials.jsonl"): void {
  const blob = new Blob([sessionToJsonLines(session)], {
    type: "application/jsonl",
  });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = filename;
  link.click();
  URL.revokeObjectURL(url);
}

/**
 * DOM rendering for the challenge surface.
 *
 * Layout follows the fixed-position rule: facts table on the left,
 * five-column keyword grid on the right, one masked single-character
 * field underneath. Focus stays in the field; keywords are never
 * clickable. Nothing secret is written to the URL, storage, or console.
 */

import { ChallengeViewModel, StudyViewModel } from "./view.js";

const THUMB_PX = 96;

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function factTable(rows: { ordinal: number; fact: string }[]): HTMLElement {
  const table = el("table", "fact-table");
  for (const row of rows) {
    const tr = el("tr", "fact-row");
    tr.appendChild(el("td", "fact-ordinal", String(row.ordinal)));
    tr.appendChild(el("td", "fact-text", row.fact));
    table.appendChild(tr);
  }
  return table;
}

function keywordGrid(model: ChallengeViewModel | StudyViewModel): HTMLElement {
  const grid = el("div", "keyword-grid");
  const highlighted = "highlightedOrdinal" in model ? model.highlightedOrdinal : null;
  for (const cell of model.cells) {
    const box = el("div", "keyword-cell");
    if (cell.ordinal === highlighted) {
      box.classList.add("studied");
    }
    box.style.gridRow = String(cell.row + 1);
    box.style.gridColumn = String(cell.column + 1);
    const img = document.createElement("img");
    img.src = cell.imageUrl;
    img.alt = "";
    img.width = THUMB_PX;
    img.height = THUMB_PX;
    box.appendChild(img);
    box.appendChild(
      el("div", "keyword-label", `${cell.ordinal}. ${cell.keyword} (${cell.keyLetter})`)
    );
    grid.appendChild(box);
  }
  return grid;
}

export function maskedInput(onKey: (letter: string) => void): HTMLInputElement {
  const field = document.createElement("input");
  field.type = "password";
  field.maxLength = 1;
  field.autocomplete = "off";
  field.className = "key-entry";
  field.addEventListener("input", () => {
    const letter = field.value;
    field.value = "";
    if (/^[a-z]$/i.test(letter)) {
      onKey(letter.toLowerCase());
    }
  });
  return field;
}

export function renderChallengeScreen(
  root: HTMLElement,
  model: ChallengeViewModel,
  onKey: (letter: string) => void
): void {
  root.replaceChildren();
  if (model.awaitingFinalize) {
    root.appendChild(el("p", "status", "Checking your answers..."));
    return;
  }
  root.appendChild(el("h2", "category", model.category));
  const columns = el("div", "screen-columns");
  columns.appendChild(factTable(model.factRows));
  columns.appendChild(keywordGrid(model));
  root.appendChild(columns);
  const field = maskedInput(onKey);
  root.appendChild(field);
  field.focus();
}

export function renderStudyScreen(
  root: HTMLElement,
  model: StudyViewModel,
  onKey: (letter: string) => void
): void {
  root.replaceChildren();
  root.appendChild(el("h2", "category", model.category));
  root.appendChild(
    el("p", "study-banner", `Step ${model.step + 1} of ${model.totalSteps}: remember this keyword`)
  );
  const card = el("div", "study-card");
  const img = document.createElement("img");
  img.src = model.imageUrl;
  img.alt = "";
  img.width = THUMB_PX;
  img.height = THUMB_PX;
  card.appendChild(img);
  card.appendChild(el("div", "study-keyword", model.keyword));
  card.appendChild(el("div", "study-fact", model.fact));
  root.appendChild(card);
  root.appendChild(keywordGrid(model));
  root.appendChild(
    el("p", "prompt", "Type the key letter shown next to your keyword to confirm")
  );
  const field = maskedInput(onKey);
  root.appendChild(field);
  field.focus();
}

export function renderOutcome(root: HTMLElement, message: string, ok: boolean): void {
  root.replaceChildren();
  root.appendChild(el("p", ok ? "status success" : "status failure", message));
}

export function renderLocked(root: HTMLElement, detail?: string): void {
  root.replaceChildren();
  root.appendChild(
    el("p", "status locked", detail ?? "Account temporarily locked. Try again later.")
  );
  const field = maskedInput(() => undefined);
  field.disabled = true;
  root.appendChild(field);
}

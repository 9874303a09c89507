/**
 * DOM-independent view models for the challenge and study screens.
 *
 * The grid keeps cells in manifest order on every render so spatial
 * position works as a memory cue; only the parenthesized key letters
 * change between challenges. Facts live in a side table keyed by
 * ordinal, matching the keyword numbers shown in the grid.
 */

import type { ChallengeView, PortfolioRender, StudyView } from "./api.js";

export const GRID_COLUMNS = 5;

export interface CellModel {
  keyword: string;
  ordinal: number;
  keyLetter: string;
  imageUrl: string;
  row: number;
  column: number;
}

export interface FactRow {
  ordinal: number;
  fact: string;
}

export interface ChallengeViewModel {
  sessionId: string;
  step: number;
  portfolioId: string;
  category: string;
  cells: CellModel[];
  factRows: FactRow[];
  input: { masked: true; maxLength: number };
  awaitingFinalize: boolean;
}

export interface StudyViewModel {
  sessionId: string;
  step: number;
  totalSteps: number;
  portfolioId: string;
  category: string;
  keyword: string;
  fact: string;
  imageUrl: string;
  cells: CellModel[];
  highlightedOrdinal: number;
}

function toCells(portfolio: PortfolioRender): CellModel[] {
  // entries arrive in manifest order; position derives from that order
  // alone, never from the per-render key letters
  return portfolio.entries.map((entry, index) => ({
    keyword: entry.keyword,
    ordinal: entry.ordinal,
    keyLetter: entry.key_symbol,
    imageUrl: entry.image_url,
    row: Math.floor(index / GRID_COLUMNS),
    column: index % GRID_COLUMNS,
  }));
}

function assertBijectiveLetters(cells: CellModel[]): void {
  const letters = new Set(cells.map((c) => c.keyLetter));
  if (letters.size !== cells.length) {
    throw new Error("challenge render has duplicate key letters");
  }
}

export function renderChallenge(view: ChallengeView): ChallengeViewModel {
  if (view.portfolio === null) {
    return {
      sessionId: view.session_id,
      step: view.step,
      portfolioId: "",
      category: "",
      cells: [],
      factRows: [],
      input: { masked: true, maxLength: view.input.length },
      awaitingFinalize: true,
    };
  }
  const cells = toCells(view.portfolio);
  assertBijectiveLetters(cells);
  return {
    sessionId: view.session_id,
    step: view.step,
    portfolioId: view.portfolio.portfolio_id,
    category: view.portfolio.category,
    cells,
    factRows: view.portfolio.entries.map((e) => ({ ordinal: e.ordinal, fact: e.fact })),
    input: { masked: true, maxLength: view.input.length },
    awaitingFinalize: view.state === "awaiting_finalize",
  };
}

export function renderStudy(view: StudyView): StudyViewModel {
  const cells = toCells(view.portfolio);
  assertBijectiveLetters(cells);
  return {
    sessionId: view.session_id,
    step: view.step,
    totalSteps: view.total_steps,
    portfolioId: view.portfolio.portfolio_id,
    category: view.portfolio.category,
    keyword: view.keyword,
    fact: view.fact,
    imageUrl: view.image_url,
    cells,
    highlightedOrdinal: view.ordinal,
  };
}

/** Key letter currently bound to an ordinal, for scripted drivers. */
export function letterForOrdinal(model: ChallengeViewModel, ordinal: number): string {
  const cell = model.cells.find((c) => c.ordinal === ordinal);
  if (!cell) {
    throw new Error(`ordinal ${ordinal} not in this portfolio`);
  }
  return cell.keyLetter;
}

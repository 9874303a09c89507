/**
 * Session drivers for the two flows.
 *
 * One request is in flight at a time; each driver awaits the previous
 * response before issuing the next. Wrong login entries are not special
 * cased anywhere here: the next portfolio renders exactly like any
 * other and only finalize reveals the outcome.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  ChallengeViewModel,
  StudyViewModel,
  letterForOrdinal,
  renderChallenge,
  renderStudy,
} from "./view.js";

export interface RegistrationOutcome {
  completed: boolean;
  studied: StudyViewModel[];
  retries: number;
}

export interface LoginOutcome {
  result: "success" | "failure" | "locked";
  renders: ChallengeViewModel[];
  lockedDetail?: string;
}

/** Types the letter currently bound to the studied keyword. */
export function correctStudyAnswer(study: StudyViewModel): string {
  const cell = study.cells.find((c) => c.ordinal === study.highlightedOrdinal);
  if (!cell) {
    throw new Error("studied keyword missing from its own portfolio");
  }
  return cell.keyLetter;
}

export async function registrationFlow(
  client: ApiClient,
  userId: string,
  adminToken: string,
  answer: (study: StudyViewModel) => string = correctStudyAnswer
): Promise<RegistrationOutcome> {
  const start = await client.registerStart(userId, adminToken);
  let study = renderStudy(start.study);
  const studied: StudyViewModel[] = [study];
  let retries = 0;
  for (;;) {
    let response;
    try {
      response = await client.registerKey(study.sessionId, answer(study));
    } catch (error) {
      if (error instanceof ApiError && error.body.error === "wrong_key") {
        // study panel stays up; re-fetch for a fresh key binding
        retries += 1;
        study = renderStudy(await client.registerStudy(study.sessionId));
        continue;
      }
      throw error;
    }
    if (response.state === "complete") {
      return { completed: true, studied, retries };
    }
    if (response.study === null) {
      throw new Error("study state without a study view");
    }
    study = renderStudy(response.study);
    studied.push(study);
  }
}

export async function loginFlow(
  client: ApiClient,
  userId: string,
  chooseKey: (model: ChallengeViewModel) => string
): Promise<LoginOutcome> {
  let view;
  try {
    view = await client.loginStart(userId);
  } catch (error) {
    if (error instanceof ApiError && error.status === 423) {
      return { result: "locked", renders: [], lockedDetail: error.body.detail };
    }
    throw error;
  }
  let model = renderChallenge(view);
  const renders: ChallengeViewModel[] = [model];
  while (!model.awaitingFinalize) {
    model = renderChallenge(await client.loginKey(model.sessionId, chooseKey(model)));
    renders.push(model);
  }
  try {
    const final = await client.loginFinalize(model.sessionId);
    return { result: final.result, renders };
  } catch (error) {
    if (error instanceof ApiError && error.status === 401) {
      return { result: "failure", renders };
    }
    throw error;
  }
}

/** Scripted login that knows the credential: used by tests and demos. */
export function knownCredentialChooser(
  ordinalsByPortfolioId: Record<string, number>
): (model: ChallengeViewModel) => string {
  return (model) => {
    const known = ordinalsByPortfolioId[model.portfolioId];
    if (known === undefined) {
      // portfolio the credential never visits: any letter, the chain
      // absorbs it without feedback
      return model.cells[0].keyLetter;
    }
    return letterForOrdinal(model, known);
  };
}

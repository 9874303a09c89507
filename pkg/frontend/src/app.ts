/**
 * Page controller: wires the API client to the DOM screens.
 *
 * One request in flight at a time; keypresses during a pending request
 * are dropped rather than queued.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  renderChallengeScreen,
  renderLocked,
  renderOutcome,
  renderStudyScreen,
} from "./dom.js";
import { renderChallenge, renderStudy } from "./view.js";

export class LoginController {
  private busy = false;

  constructor(
    private readonly client: ApiClient,
    private readonly root: HTMLElement
  ) {}

  async start(userId: string): Promise<void> {
    try {
      const view = await this.client.loginStart(userId);
      this.show(view);
    } catch (error) {
      if (error instanceof ApiError && error.status === 423) {
        renderLocked(this.root, error.body.detail);
        return;
      }
      throw error;
    }
  }

  private show(view: Parameters<typeof renderChallenge>[0]): void {
    const model = renderChallenge(view);
    if (model.awaitingFinalize) {
      void this.finalize(model.sessionId);
      return;
    }
    renderChallengeScreen(this.root, model, (letter) => void this.submit(model.sessionId, letter));
  }

  private async submit(sessionId: string, letter: string): Promise<void> {
    if (this.busy) {
      return;
    }
    this.busy = true;
    try {
      this.show(await this.client.loginKey(sessionId, letter));
    } finally {
      this.busy = false;
    }
  }

  private async finalize(sessionId: string): Promise<void> {
    try {
      const final = await this.client.loginFinalize(sessionId);
      renderOutcome(this.root, "Signed in.", final.result === "success");
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        renderOutcome(this.root, "Sign-in failed. Start over to retry.", false);
        return;
      }
      throw error;
    }
  }
}

export class RegistrationController {
  private busy = false;

  constructor(
    private readonly client: ApiClient,
    private readonly root: HTMLElement,
    private readonly adminToken: string
  ) {}

  async start(userId: string): Promise<void> {
    const start = await this.client.registerStart(userId, this.adminToken);
    this.show(start.study);
  }

  private show(view: Parameters<typeof renderStudy>[0]): void {
    const model = renderStudy(view);
    renderStudyScreen(this.root, model, (letter) => void this.submit(model.sessionId, letter));
  }

  private async submit(sessionId: string, letter: string): Promise<void> {
    if (this.busy) {
      return;
    }
    this.busy = true;
    try {
      const response = await this.client.registerKey(sessionId, letter);
      if (response.state === "complete") {
        renderOutcome(this.root, "Registration complete.", true);
      } else if (response.study !== null) {
        this.show(response.study);
      }
    } catch (error) {
      if (error instanceof ApiError && error.body.error === "wrong_key") {
        // stay on the study panel; fetch a fresh render and try again
        this.show(await this.client.registerStudy(sessionId));
        return;
      }
      throw error;
    } finally {
      this.busy = false;
    }
  }
}

export function mount(root: HTMLElement, baseUrl: string): void {
  const client = new ApiClient(baseUrl);
  const form = document.createElement("form");
  const userField = document.createElement("input");
  userField.type = "text";
  userField.placeholder = "user id";
  userField.autocomplete = "username";
  const button = document.createElement("button");
  button.type = "submit";
  button.textContent = "Sign in";
  form.append(userField, button);
  const screen = document.createElement("div");
  screen.className = "screen";
  root.append(form, screen);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void new LoginController(client, screen).start(userField.value);
  });
}

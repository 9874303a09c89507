/**
 * Typed client for the authentication service REST interface.
 *
 * The transport is injectable so tests can script a fake server; the
 * default is the browser fetch. All payloads mirror the service's JSON
 * schemas verbatim (snake_case field names).
 */

export interface ChallengeEntry {
  keyword: string;
  ordinal: number;
  fact: string;
  image_url: string;
  key_symbol: string;
}

export interface PortfolioRender {
  portfolio_id: string;
  category: string;
  entries: ChallengeEntry[];
}

export interface InputSpec {
  type: string;
  length: number;
}

export interface ChallengeView {
  session_id: string;
  step: number;
  state: "challenge" | "awaiting_finalize";
  portfolio: PortfolioRender | null;
  input: InputSpec;
}

export interface StudyView {
  session_id: string;
  step: number;
  total_steps: number;
  keyword: string;
  ordinal: number;
  fact: string;
  image_url: string;
  portfolio: PortfolioRender;
}

export interface RegisterStartResponse {
  session_id: string;
  study: StudyView;
}

export interface RegisterKeyResponse {
  state: "study" | "complete";
  step: number;
  study: StudyView | null;
}

export interface LoginFinalizeResponse {
  result: "success" | "failure";
}

export interface ServiceErrorBody {
  error: string;
  detail?: string;
  step?: number;
}

export type Transport = (
  url: string,
  init: { method: string; headers: Record<string, string>; body?: string }
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ServiceErrorBody
  ) {
    super(`service error ${status}: ${body.error}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly transport: Transport = (url, init) => fetch(url, init)
  ) {}

  assetUrl(path: string): string {
    return this.baseUrl + path;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    headers: Record<string, string> = {}
  ): Promise<T> {
    const init = {
      method,
      headers: { "content-type": "application/json", ...headers },
      body: body === undefined ? undefined : JSON.stringify(body),
    };
    const response = await this.transport(this.baseUrl + path, init);
    const payload = await response.json();
    if (response.status >= 400) {
      throw new ApiError(response.status, payload as ServiceErrorBody);
    }
    return payload as T;
  }

  registerStart(userId: string, adminToken: string): Promise<RegisterStartResponse> {
    return this.request("POST", "/register/start", { user_id: userId }, {
      "X-Admin-Token": adminToken,
    });
  }

  registerStudy(sessionId: string): Promise<StudyView> {
    return this.request(
      "GET",
      `/register/study?session_id=${encodeURIComponent(sessionId)}`
    );
  }

  registerKey(sessionId: string, key: string): Promise<RegisterKeyResponse> {
    return this.request("POST", "/register/key", { session_id: sessionId, key });
  }

  loginStart(userId: string): Promise<ChallengeView> {
    return this.request("POST", "/login/start", { user_id: userId });
  }

  loginKey(sessionId: string, key: string): Promise<ChallengeView> {
    return this.request("POST", "/login/key", { session_id: sessionId, key });
  }

  loginFinalize(sessionId: string): Promise<LoginFinalizeResponse> {
    return this.request("POST", "/login/finalize", { session_id: sessionId });
  }
}

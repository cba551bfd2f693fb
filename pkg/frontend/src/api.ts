/** Thin client over the engine's /api/v1 endpoints. */

import type { AssessmentsDoc, ModelDoc, WhatIfDelta } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number,
              readonly diagnostics: string[] = []) {
    super(message);
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = '',
              private readonly fetchImpl: FetchLike =
                (input, init) => fetch(input, init)) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new ApiError(`GET ${path} failed`, response.status);
    }
    return response.json() as Promise<T>;
  }

  getModel(): Promise<ModelDoc> {
    return this.getJson<ModelDoc>('/api/v1/model');
  }

  getAssessments(): Promise<AssessmentsDoc> {
    return this.getJson<AssessmentsDoc>('/api/v1/assessments');
  }

  async postWhatIf(edits: string[]): Promise<WhatIfDelta> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/v1/whatif`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ edits }),
    });
    if (!response.ok) {
      let message = `POST /api/v1/whatif failed`;
      let diagnostics: string[] = [];
      try {
        const body = await response.json();
        message = body.error ?? message;
        diagnostics = body.diagnostics ?? [];
      } catch {
        // non-JSON error body: keep the generic message
      }
      throw new ApiError(message, response.status, diagnostics);
    }
    return response.json() as Promise<WhatIfDelta>;
  }
}

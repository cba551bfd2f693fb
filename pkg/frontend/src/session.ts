/**
 * Session export and replay: the edit list plus the verdict snapshot the
 * facilitator saw, written as a small JSON file a later session can
 * replay against the same server to reproduce identical verdicts.
 */

import type { ApiClient } from './api.js';
import type { SessionStore } from './state.js';
import type { Verdict } from './types.js';

export const SESSION_SCHEMA_VERSION = '1';

export interface SessionExport {
  schemaVersion: string;
  configuration: string;
  edits: string[];
  verdicts: Record<string, Record<string, Verdict>>;
}

export function exportSession(store: SessionStore): SessionExport {
  const verdicts: Record<string, Record<string, Verdict>> = {};
  if (store.edits.length > 0 && store.delta) {
    for (const [config, rows] of Object.entries(store.delta.after)) {
      verdicts[config] = { ...rows };
    }
  } else {
    for (const config of store.assessments?.configurations ?? []) {
      if (!config.valid) {
        continue;
      }
      verdicts[config.name] = {};
      for (const assessment of config.assessments) {
        verdicts[config.name]![assessment.outcome] = assessment.verdict;
      }
    }
  }
  return {
    schemaVersion: SESSION_SCHEMA_VERSION,
    configuration: store.configuration,
    edits: [...store.edits],
    verdicts,
  };
}

export function parseSession(text: string): SessionExport {
  const parsed = JSON.parse(text);
  if (parsed.schemaVersion !== SESSION_SCHEMA_VERSION) {
    throw new Error(`unsupported session schema ${parsed.schemaVersion}`);
  }
  if (!Array.isArray(parsed.edits)
      || !parsed.edits.every((e: unknown) => typeof e === 'string')) {
    throw new Error('session export lacks an edit list');
  }
  return {
    schemaVersion: parsed.schemaVersion,
    configuration: typeof parsed.configuration === 'string'
      ? parsed.configuration : '',
    edits: parsed.edits,
    verdicts: parsed.verdicts ?? {},
  };
}

export interface ReplayResult {
  identical: boolean;
  differences: string[];
  verdicts: Record<string, Record<string, Verdict>>;
}

/** Re-POST the session's edits and compare verdicts with the snapshot. */
export async function replaySession(api: ApiClient, session: SessionExport,
                                    ): Promise<ReplayResult> {
  let verdicts: Record<string, Record<string, Verdict>>;
  if (session.edits.length > 0) {
    const delta = await api.postWhatIf(session.edits);
    verdicts = delta.after;
  } else {
    const assessments = await api.getAssessments();
    verdicts = {};
    for (const config of assessments.configurations) {
      if (!config.valid) {
        continue;
      }
      verdicts[config.name] = {};
      for (const assessment of config.assessments) {
        verdicts[config.name]![assessment.outcome] = assessment.verdict;
      }
    }
  }
  const differences: string[] = [];
  const configs = new Set([...Object.keys(verdicts),
                           ...Object.keys(session.verdicts)]);
  for (const config of [...configs].sort()) {
    const now = verdicts[config] ?? {};
    const then = session.verdicts[config] ?? {};
    const outcomes = new Set([...Object.keys(now), ...Object.keys(then)]);
    for (const outcome of [...outcomes].sort()) {
      if (now[outcome] !== then[outcome]) {
        differences.push(`${config}/${outcome}: `
          + `${then[outcome] ?? '-'} -> ${now[outcome] ?? '-'}`);
      }
    }
  }
  return { identical: differences.length === 0, differences, verdicts };
}

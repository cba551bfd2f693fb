import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { exportSession, parseSession, replaySession,
         SESSION_SCHEMA_VERSION } from '../src/session.js';
import { SessionStore } from '../src/state.js';
import type { AssessmentsDoc, WhatIfDelta } from '../src/types.js';

import assessmentsJson from './fixtures/assessments.json';
import whatifB1B2 from './fixtures/whatif_b1b2.json';
import whatifB6 from './fixtures/whatif_b6.json';

const assessments = assessmentsJson as unknown as AssessmentsDoc;
const deltaB1B2 = whatifB1B2 as unknown as WhatIfDelta;
const deltaB6 = whatifB6 as unknown as WhatIfDelta;

/** Serves the captured engine responses keyed by the posted edit list. */
function fakeApi(): ApiClient {
  const canned = new Map<string, WhatIfDelta>([
    [deltaB1B2.edits.join('|'), deltaB1B2],
    [deltaB6.edits.join('|'), deltaB6],
  ]);
  const fetchImpl = async (input: string, init?: RequestInit) => {
    if (input.endsWith('/api/v1/assessments')) {
      return new Response(JSON.stringify(assessments), { status: 200 });
    }
    if (input.endsWith('/api/v1/whatif') && init?.method === 'POST') {
      const edits = JSON.parse(String(init.body)).edits as string[];
      const hit = canned.get(edits.join('|'));
      if (!hit) {
        return new Response(JSON.stringify({ error: 'unexpected edits' }),
                            { status: 400 });
      }
      return new Response(JSON.stringify(hit), { status: 200 });
    }
    return new Response('{}', { status: 404 });
  };
  return new ApiClient('', fetchImpl);
}

describe('session export', () => {
  it('empty session exports an empty edit list with base verdicts', () => {
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    const session = exportSession(store);
    expect(session.schemaVersion).toBe(SESSION_SCHEMA_VERSION);
    expect(session.edits).toEqual([]);
    expect(session.verdicts['?R0=present']!['O1.semantic'])
      .toBe('CONDITIONAL');
  });

  it('includes the latest server verdicts once edits are active', () => {
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('remove-mitigation:b2.normalize');
    store.acceptResponse(store.beginRequest(), deltaB1B2);
    const session = exportSession(store);
    expect(session.edits).toEqual(['remove-mitigation:b1.normalize',
                                   'remove-mitigation:b2.normalize']);
    expect(session.verdicts['?R0=present']!['O1.semantic']).toBe('OPEN');
    expect(session.verdicts['?R0=present']!.O4).toBe('OPEN');
  });

  it('round-trips through its JSON form', () => {
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    store.toggleEdit('remove-introduce:b6:location_advantage');
    store.acceptResponse(store.beginRequest(), deltaB6);
    const text = JSON.stringify(exportSession(store));
    const parsed = parseSession(text);
    expect(parsed.edits).toEqual(['remove-introduce:b6:location_advantage']);
    expect(parsed.verdicts['?R0=absent']!.O4).toBe('CLOSED');
  });

  it('rejects foreign schema versions', () => {
    expect(() => parseSession(JSON.stringify({ schemaVersion: '9',
                                               edits: [] })))
      .toThrow(/unsupported session schema/);
  });
});

describe('session replay', () => {
  it('re-posting the exported edits reproduces identical verdicts',
     async () => {
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('remove-mitigation:b2.normalize');
    store.acceptResponse(store.beginRequest(), deltaB1B2);
    const session = exportSession(store);

    const replay = await replaySession(fakeApi(), session);
    expect(replay.identical).toBe(true);
    expect(replay.differences).toEqual([]);
  });

  it('an empty session replays against the base snapshot', async () => {
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    const replay = await replaySession(fakeApi(), exportSession(store));
    expect(replay.identical).toBe(true);
  });

  it('verdict drift is reported, not silently accepted', async () => {
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('remove-mitigation:b2.normalize');
    store.acceptResponse(store.beginRequest(), deltaB1B2);
    const session = exportSession(store);
    session.verdicts['?R0=present']!['O1.semantic'] = 'CLOSED';
    const replay = await replaySession(fakeApi(), session);
    expect(replay.identical).toBe(false);
    expect(replay.differences.join(' ')).toContain('O1.semantic');
  });
});

/**
 * The full facilitation loop at logic level: load the engine's snapshot,
 * toggle the two normalization mitigations, watch the gender-route badge
 * go CONDITIONAL -> OPEN with its paths newly marked open, select the
 * location outcome and see exactly the multiplier chain, then export the
 * session and replay it to identical verdicts.
 */

import { describe, expect, it } from 'vitest';

import { highlightForOutcome } from '../src/highlight.js';
import { exportSession, replaySession } from '../src/session.js';
import { SessionStore } from '../src/state.js';
import { ApiClient } from '../src/api.js';
import type { AssessmentsDoc, ModelDoc, WhatIfDelta } from '../src/types.js';

import assessmentsJson from './fixtures/assessments.json';
import modelJson from './fixtures/model.json';
import whatifB1B2 from './fixtures/whatif_b1b2.json';

const model = modelJson as unknown as ModelDoc;
const assessments = assessmentsJson as unknown as AssessmentsDoc;
const deltaB1B2 = whatifB1B2 as unknown as WhatIfDelta;

function engineStub(): ApiClient {
  const fetchImpl = async (input: string, init?: RequestInit) => {
    if (input.endsWith('/api/v1/assessments')) {
      return new Response(JSON.stringify(assessments), { status: 200 });
    }
    if (input.endsWith('/api/v1/whatif')) {
      const edits = JSON.parse(String(init?.body)).edits as string[];
      if (edits.join('|') === deltaB1B2.edits.join('|')) {
        return new Response(JSON.stringify(deltaB1B2), { status: 200 });
      }
      return new Response(JSON.stringify({ error: 'unexpected' }),
                          { status: 400 });
    }
    return new Response('{}', { status: 404 });
  };
  return new ApiClient('', fetchImpl);
}

describe('facilitation loop', () => {
  it('toggling both normalizations flips the badge and opens the paths',
     async () => {
    const api = engineStub();
    const store = new SessionStore();
    store.loadSnapshot(await api.getAssessments());
    store.configuration = '?R0=present';

    expect(store.verdicts().get('O1.semantic')).toBe('CONDITIONAL');
    const before = highlightForOutcome(
      model,
      store.baseAssessments().find(a => a.outcome === 'O1.semantic'),
      store.removedMitigations());
    expect(before.solid.size).toBe(0);
    expect(before.dashed.size).toBeGreaterThan(0);

    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('remove-mitigation:b2.normalize');
    const seq = store.beginRequest();
    store.acceptResponse(seq, await api.postWhatIf([...store.edits]));

    expect(store.verdicts().get('O1.semantic')).toBe('OPEN');
    const after = highlightForOutcome(
      model,
      store.baseAssessments().find(a => a.outcome === 'O1.semantic'),
      store.removedMitigations());
    expect(after.dashed.size).toBe(0);
    expect(after.solid.size).toBe(before.dashed.size);

    // nothing else moved
    for (const outcome of ['I1', 'I2', 'O2.aimatch', 'O3.aimatch', 'O4']) {
      const base = store.baseAssessments()
        .find(a => a.outcome === outcome)!.verdict;
      expect(store.verdicts().get(outcome)).toBe(base);
    }

    // toggling back restores the conditional badge (involution)
    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('remove-mitigation:b2.normalize');
    expect(store.edits).toEqual([]);
    expect(store.verdicts().get('O1.semantic')).toBe('CONDITIONAL');
  });

  it('selecting the location outcome highlights exactly its chain', () => {
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    store.configuration = '?R0=present';
    store.selectedOutcome = 'O4';
    const marks = highlightForOutcome(
      model,
      store.baseAssessments().find(a => a.outcome === 'O4'),
      store.removedMitigations());
    const chain = [
      'site:S3->site:S4', 'site:S4->site:C0_b', 'site:C0_b->channel:e',
      'channel:e->site:C1', 'site:C1->site:Impression',
      'site:Impression->channel:f2', 'channel:f2->site:C2',
      'site:C2->site:SoftSkills', 'site:SoftSkills->channel:g2',
      'channel:g2->site:C3', 'site:C3->site:C4'];
    expect([...marks.solid].sort()).toEqual([...chain].sort());
  });

  it('the exported session replays to identical verdicts', async () => {
    const api = engineStub();
    const store = new SessionStore();
    store.loadSnapshot(assessments);
    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('remove-mitigation:b2.normalize');
    store.acceptResponse(store.beginRequest(),
                         await api.postWhatIf([...store.edits]));
    const replay = await replaySession(api, exportSession(store));
    expect(replay.identical).toBe(true);
  });
});

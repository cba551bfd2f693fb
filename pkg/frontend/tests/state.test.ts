import { describe, expect, it } from 'vitest';

import { SessionStore } from '../src/state.js';
import type { AssessmentsDoc, WhatIfDelta } from '../src/types.js';

import assessmentsJson from './fixtures/assessments.json';
import whatifB1B2 from './fixtures/whatif_b1b2.json';

const assessments = assessmentsJson as unknown as AssessmentsDoc;
const delta = whatifB1B2 as unknown as WhatIfDelta;

function freshStore(): SessionStore {
  const store = new SessionStore();
  store.loadSnapshot(assessments);
  return store;
}

describe('SessionStore', () => {
  it('loads the first valid configuration', () => {
    const store = freshStore();
    expect(store.configuration).toBe('?R0=absent');
    expect(store.configurationNames()).toEqual(['?R0=absent', '?R0=present']);
  });

  it('edit toggles are involutive', () => {
    const store = freshStore();
    const spec = 'remove-mitigation:b1.normalize';
    store.toggleEdit(spec);
    expect(store.edits).toEqual([spec]);
    store.toggleEdit(spec);
    expect(store.edits).toEqual([]);
  });

  it('base verdicts come straight from the snapshot', () => {
    const store = freshStore();
    const verdicts = store.verdicts();
    expect(verdicts.get('O1.semantic')).toBe('CONDITIONAL');
    expect(verdicts.get('O4')).toBe('OPEN');
    expect(verdicts.get('O2.aimatch')).toBe('CLOSED');
  });

  it('verdicts follow the latest accepted server delta', () => {
    const store = freshStore();
    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('remove-mitigation:b2.normalize');
    const seq = store.beginRequest();
    expect(store.acceptResponse(seq, delta)).toBe(true);
    expect(store.verdicts().get('O1.semantic')).toBe('OPEN');
    // every other badge is untouched
    expect(store.verdicts().get('I1')).toBe('OPEN');
    expect(store.verdicts().get('O2.aimatch')).toBe('CLOSED');
  });

  it('stale responses are discarded (last write wins)', () => {
    const store = freshStore();
    store.toggleEdit('remove-mitigation:b1.normalize');
    const slow = store.beginRequest();
    store.toggleEdit('remove-mitigation:b1.normalize'); // user toggled back
    const fast = store.beginRequest();
    expect(store.acceptResponse(fast, null)).toBe(true);
    expect(store.acceptResponse(slow, delta)).toBe(false);
    expect(store.verdicts().get('O1.semantic')).toBe('CONDITIONAL');
  });

  it('toggling back restores the original badge state', () => {
    const store = freshStore();
    const spec = 'remove-mitigation:b1.normalize';
    store.toggleEdit(spec);
    const seq = store.beginRequest();
    store.acceptResponse(seq, delta);
    store.toggleEdit(spec); // involution: edits empty again
    expect(store.edits).toEqual([]);
    // with no edits the delta is ignored and base verdicts apply
    expect(store.verdicts().get('O1.semantic')).toBe('CONDITIONAL');
  });

  it('collects removed mitigations from the edit list', () => {
    const store = freshStore();
    store.toggleEdit('remove-mitigation:b1.normalize');
    store.toggleEdit('choose:?R0:present');
    expect([...store.removedMitigations()]).toEqual(['b1.normalize']);
  });
});

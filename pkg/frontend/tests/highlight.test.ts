import { describe, expect, it } from 'vitest';

import { highlightForOutcome } from '../src/highlight.js';
import type { AssessmentsDoc, ModelDoc } from '../src/types.js';

import assessmentsJson from './fixtures/assessments.json';
import modelJson from './fixtures/model.json';

const model = modelJson as unknown as ModelDoc;
const assessments = assessmentsJson as unknown as AssessmentsDoc;

function assessment(config: string, outcome: string) {
  return assessments.configurations.find(c => c.name === config)!
    .assessments.find(a => a.outcome === outcome)!;
}

// The multiplier chain b6..h rendered under the junction encoding.
const I3_EDGES = [
  'site:S3->site:S4',               // b6 (simple channel)
  'site:S4->site:C0_b',             // b7
  'site:C0_b->channel:e',           // e is a junction (five inputs)
  'channel:e->site:C1',
  'site:C1->site:Impression',       // f1
  'site:Impression->channel:f2',
  'channel:f2->site:C2',
  'site:C2->site:SoftSkills',       // g1
  'site:SoftSkills->channel:g2',
  'channel:g2->site:C3',
  'site:C3->site:C4',               // h
];

describe('highlightForOutcome', () => {
  it('marks exactly the multiplier chain for the location outcome', () => {
    const marks = highlightForOutcome(
      model, assessment('?R0=present', 'O4'), new Set());
    expect([...marks.solid].sort()).toEqual([...I3_EDGES].sort());
    expect(marks.dashed.size).toBe(0);
  });

  // The path starts at the introducing channel b6, whose incoming hop is
  // not part of the risk route.
  it('never marks the multiplier input beyond the origin', () => {
    const marks = highlightForOutcome(
      model, assessment('?R0=present', 'O4'), new Set());
    expect(marks.solid.has('site:S1->channel:b5')).toBe(false);
  });

  it('conditional paths render dashed until their blockers are removed',
     () => {
    const base = highlightForOutcome(
      model, assessment('?R0=present', 'O1.semantic'), new Set());
    expect(base.solid.size).toBe(0);
    expect(base.dashed.has('site:CandidateDB->site:EC')).toBe(true);
    expect(base.dashed.has('channel:b2->site:ER')).toBe(true);

    const afterRemoval = highlightForOutcome(
      model, assessment('?R0=present', 'O1.semantic'),
      new Set(['b1.normalize', 'b2.normalize']));
    expect(afterRemoval.dashed.size).toBe(0);
    // the formerly blocked chain is now marked open
    expect(afterRemoval.solid.has('site:CandidateDB->site:EC')).toBe(true);
    expect(afterRemoval.solid.has('channel:b3->site:S1')).toBe(true);
    expect(afterRemoval.solid.has('site:S4->site:C0_b')).toBe(true);
  });

  it('removing only one of two blockers opens only that side', () => {
    const partial = highlightForOutcome(
      model, assessment('?R0=present', 'O1.semantic'),
      new Set(['b1.normalize']));
    expect(partial.solid.has('site:CandidateDB->site:EC')).toBe(true);
    expect(partial.dashed.has('channel:b2->site:ER')).toBe(true);
  });

  it('no marks without a selected assessment', () => {
    const marks = highlightForOutcome(model, undefined, new Set());
    expect(marks.solid.size + marks.dashed.size).toBe(0);
  });
});

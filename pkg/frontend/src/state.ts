/**
 * Session state: the loaded snapshot, the accumulated edit list, and the
 * latest accepted what-if response.
 *
 * Verdicts are never computed here; badges always come from the newest
 * server answer for the current edits. Requests carry a sequence number
 * and a response is dropped when a newer request was already issued
 * (last write wins under rapid toggling).
 */

import type {
  AssessmentDoc,
  AssessmentsDoc,
  Verdict,
  WhatIfDelta,
} from './types.js';

export class SessionStore {
  assessments: AssessmentsDoc | null = null;
  delta: WhatIfDelta | null = null;
  edits: string[] = [];
  configuration = '';
  selectedOutcome: string | null = null;
  expandedChannels: string[] = [];

  private issuedSeq = 0;
  private acceptedSeq = 0;

  loadSnapshot(assessments: AssessmentsDoc): void {
    this.assessments = assessments;
    this.delta = null;
    this.edits = [];
    const first = assessments.configurations.find(c => c.valid);
    this.configuration = first ? first.name : '';
  }

  configurationNames(): string[] {
    return (this.assessments?.configurations ?? [])
      .filter(c => c.valid).map(c => c.name);
  }

  /** Add the edit, or remove it when already present (involutive). */
  toggleEdit(spec: string): void {
    const index = this.edits.indexOf(spec);
    if (index >= 0) {
      this.edits.splice(index, 1);
    } else {
      this.edits.push(spec);
    }
  }

  hasEdit(spec: string): boolean {
    return this.edits.includes(spec);
  }

  /** Issue a request ticket; pair with acceptResponse. */
  beginRequest(): number {
    this.issuedSeq += 1;
    return this.issuedSeq;
  }

  /** Accept a response unless a newer request was issued meanwhile. */
  acceptResponse(seq: number, delta: WhatIfDelta | null): boolean {
    if (seq < this.issuedSeq || seq <= this.acceptedSeq) {
      return false; // stale: a newer toggle superseded this request
    }
    this.acceptedSeq = seq;
    this.delta = delta;
    return true;
  }

  /** Server-derived verdict per outcome id for the current configuration. */
  verdicts(): Map<string, Verdict> {
    const out = new Map<string, Verdict>();
    const config = this.assessments?.configurations
      .find(c => c.name === this.configuration);
    for (const assessment of config?.assessments ?? []) {
      out.set(assessment.outcome, assessment.verdict);
    }
    if (this.edits.length > 0 && this.delta) {
      const after = this.delta.after[this.configuration] ?? {};
      for (const [outcome, verdict] of Object.entries(after)) {
        out.set(outcome, verdict);
      }
    }
    return out;
  }

  /** The base (pre-edit) assessment rows of the current configuration. */
  baseAssessments(): AssessmentDoc[] {
    const config = this.assessments?.configurations
      .find(c => c.name === this.configuration);
    return config?.assessments ?? [];
  }

  /** Mitigation ids removed by the session's edits. */
  removedMitigations(): Set<string> {
    const removed = new Set<string>();
    for (const spec of this.edits) {
      const parts = spec.split(':');
      if (parts[0] === 'remove-mitigation' && parts[1]) {
        removed.add(parts[1]);
      }
    }
    return removed;
  }

  toggleExpanded(channelId: string): void {
    const index = this.expandedChannels.indexOf(channelId);
    if (index >= 0) {
      this.expandedChannels.splice(index, 1);
    } else {
      this.expandedChannels.push(channelId);
    }
  }
}

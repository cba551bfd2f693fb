/**
 * Wire types for the /api/v1 JSON documents (docs/schema.md in the engine
 * repository). Consumers tolerate additive fields, so every interface here
 * lists only what the viewer reads.
 */

export type Verdict = 'OPEN' | 'CONDITIONAL' | 'CLOSED';

export interface SiteDoc {
  id: string;
  name: string;
  actor: string | null;
  subnet: string | null;
  seeds: string[];
  types: string[];
}

export interface MitigationDoc {
  id: string;
  tags: string[];
  conditional: boolean;
  note: string;
  outputs: string[];
}

export interface FlowDoc {
  kind: 'spec' | 'summary';
  drops?: MitigationDoc[];
  introduces?: unknown[];
  carries?: unknown[];
}

export interface ChannelDoc {
  id: string;
  name: string;
  inputs: string[];
  outputs: string[];
  actor: string | null;
  subnet: string | null;
  biasKinds: string[];
  flow: FlowDoc;
  definition: ModelDoc | null;
}

export interface VariantDoc {
  name: string;
  toggles: { kind: string; ref: string[] }[];
}

export interface AlternativeDoc {
  id: string;
  variants: VariantDoc[];
}

export interface SubnetDoc {
  name: string;
  label: string;
  color: string;
  within: string | null;
}

export interface OutcomeDoc {
  id: string;
  label: string;
  target: string;
  tags: string[];
  description: string;
}

export interface ModelDoc {
  sites: SiteDoc[];
  channels: ChannelDoc[];
  alternatives: AlternativeDoc[];
  subnets?: SubnetDoc[];
  outcomes?: OutcomeDoc[];
}

export interface PathDoc {
  channels: string[];
  sites: string[];
  tags: string[];
  tag: string;
  blockers: string[];
}

export interface AssessmentDoc {
  outcome: string;
  label: string;
  verdict: Verdict;
  openPaths: PathDoc[];
  unconditionallyOpenPaths: PathDoc[];
  blockingMitigations: string[];
}

export interface ConfigurationDoc {
  name: string;
  valid: boolean;
  assessments: AssessmentDoc[];
}

export interface AssessmentsDoc {
  schemaVersion: string;
  model: ModelDoc;
  configurations: ConfigurationDoc[];
}

export interface WhatIfChange {
  configuration: string;
  outcome: string;
  before: Verdict | null;
  after: Verdict | null;
  openedPaths: string[][];
  closedPaths: string[][];
}

export interface WhatIfDelta {
  schemaVersion: string;
  edits: string[];
  before: Record<string, Record<string, Verdict>>;
  after: Record<string, Record<string, Verdict>>;
  changes: WhatIfChange[];
}

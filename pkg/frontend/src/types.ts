// Response shapes of the node HTTP API, field for field.

export interface TxJson {
  tx_id: string;
  tx_type: string;
  author_id: string;
  timestamp: number;
  payload: Record<string, unknown>;
}

export interface BlockJson {
  height: number;
  block_hash: string;
  header: {
    version: number;
    height: number;
    prev_hash: string;
    timestamp: number;
    primary_id: string;
    tx_digest: string;
  };
  transactions: TxJson[];
  certificate: { validator_id: string; tag: string }[];
}

export interface PrLine {
  description: string;
  quantity: number;
  unit: string;
  specs: string;
}

export interface PurchaseRequestDoc {
  kind: "purchase_request";
  pr_id: string;
  requester: string;
  status: string;
  lines: PrLine[];
  aoc_ref: string | null;
}

export interface Quote {
  supplier: string;
  unit_prices: number[];
}

export interface AbstractOfCanvassDoc {
  kind: "abstract_of_canvass";
  aoc_id: string;
  pr_ref: string;
  quotes: Quote[];
  winner_index: number;
}

export interface PurchaseOrderDoc {
  kind: "purchase_order";
  po_id: string;
  aoc_ref: string;
  pr_ref: string;
  supplier: string;
  status: string;
  inspection_passed: boolean;
  dc_refs: string[];
  lines: { description: string; quantity: number; unit: string; unit_price: number }[];
}

export interface DeliveryChecklistDoc {
  kind: "delivery_checklist";
  dc_id: string;
  po_ref: string;
  ir_ref: string | null;
  lines: { expected: number; received: number; remarks: string }[];
}

export interface InspectionReportDoc {
  kind: "inspection_report";
  ir_id: string;
  dc_ref: string;
  inspector: string;
  all_pass: boolean;
  verdicts: { passed: number; reason: string }[];
}

export type DocumentJson =
  | PurchaseRequestDoc
  | AbstractOfCanvassDoc
  | PurchaseOrderDoc
  | DeliveryChecklistDoc
  | InspectionReportDoc;

export interface AssetJson {
  asset_uid: string;
  description: string;
  status: string;
  custodian: string | null;
  source_po: string;
  reg_tx: string;
  qr_payload?: string;
}

export interface MrJson {
  mr_tx: string;
  asset_uid: string;
  custodian: string;
  issued_by: string;
  timestamp: number;
}

export interface VerifyQrJson {
  checksum_ok: boolean;
  error?: string;
  detail?: string;
  found?: boolean;
  asset_uid?: string;
  status?: string | null;
  custodian?: string | null;
  reg_tx_confirmed?: boolean;
  history?: MrJson[];
}

export interface ValidatorsJson {
  validators: string[];
  quorum: number;
  height: number;
}

export interface PeersJson {
  peers: { peer_id: string; address: string; last_height: number | null }[];
}

export interface UsersJson {
  users: { user_id: string; display_name: string; roles: string[]; active: boolean }[];
}

export interface AuditJson {
  audit: { time_ms: number; kind: string; detail: string }[];
}

export interface ChainVerifyJson {
  ok: boolean;
  blocks_checked: number;
  error_height: number | null;
  error_code: string | null;
  error_detail: string | null;
}

export interface MempoolJson {
  pending: TxJson[];
}

export interface ApiError {
  error: string;
  detail: string;
}
